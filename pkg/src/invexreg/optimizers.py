"""Deterministic full-batch gradient descent and Adam with iteration traces."""
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import InvalidTrace, NonFinite, TraceIncomplete
from .linalg import as_vector
from .objectives import AugmentedPoint, InvexObjective

AUTO = "auto"
AUTO_SAFETY = 0.9
DIVERGENCE_FACTOR = 1e12

TRACE_COLUMNS = ("t", "fhat", "f", "grad_norm", "step_len", "path_len", "pl_ratio", "g_norm", "p_norm")


@dataclass
class GdConfig:
    step_size: Union[float, str] = AUTO
    max_iters: int = 200_000
    grad_tol: float = 1e-10
    safety: float = AUTO_SAFETY

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.grad_tol < 0:
            raise ValueError("grad_tol must be >= 0")
        if self.step_size != AUTO and not float(self.step_size) > 0:
            raise ValueError("step_size must be positive or 'auto'")


@dataclass
class AdamConfig:
    step_size: float = 1e-3
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8
    max_iters: int = 10_000
    grad_tol: float = 1e-10

    def __post_init__(self):
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class IterationTrace:
    """Per-iteration record of a run.

    Row ``t`` describes the iterate ``z_t``; ``step_len[t]`` is
    ``||z_t - z_{t-1}||`` (zero at ``t = 0``) and ``path_len`` its running sum.
    ``pl_ratio`` and ``p_norm`` are NaN for objectives without a ``p`` block.
    """

    method: str
    objective_kind: str
    lam: float
    step_size: float
    columns: dict
    final_point: np.ndarray
    start_point: np.ndarray
    reason: str
    iterates: Optional[np.ndarray] = None
    L_hat: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.columns["t"])

    def __getitem__(self, name):
        return self.columns[name]

    @property
    def iterations(self):
        return len(self) - 1

    def rows(self):
        cols = [self.columns[c] for c in TRACE_COLUMNS]
        return zip(*cols)


class _Recorder:
    def __init__(self, objective, keep_iterates):
        self.objective = objective
        self.invex = isinstance(objective, InvexObjective)
        self.data = {c: [] for c in TRACE_COLUMNS}
        self.keep = keep_iterates
        self.iterates = []
        self.path = 0.0

    def add(self, t, z, value, grad, f, g_norm, step):
        gn2 = float(grad @ grad)
        self.path += step
        if self.invex:
            lam2 = self.objective.lam ** 2
            pl = 2.0 * lam2 * value / gn2 if gn2 > 0 else 0.0
            p_norm = float(np.linalg.norm(z[self.objective.d:]))
        else:
            pl = p_norm = float("nan")
        row = (t, value, f, np.sqrt(gn2), step, self.path, pl, g_norm, p_norm)
        for c, v in zip(TRACE_COLUMNS, row):
            self.data[c].append(v)
        if self.keep:
            self.iterates.append(z.copy())
        return np.sqrt(gn2)

    def columns(self):
        out = {c: np.asarray(v, dtype=np.float64) for c, v in self.data.items()}
        out["t"] = out["t"].astype(np.int64)
        return out


def _start_vector(objective, start):
    if isinstance(start, AugmentedPoint):
        return start.stack()
    z = as_vector(start, "start").copy()
    if isinstance(objective, InvexObjective) and z.size == objective.d:
        z = objective.start(z)
    if z.size != objective.dim:
        raise ValueError(f"start has size {z.size}, objective expects {objective.dim}")
    return z


def _evaluate(objective, z):
    value, grad, f, g_norm = objective.evaluate(z)
    if not (np.isfinite(value) and np.all(np.isfinite(grad))):
        raise NonFinite("objective or gradient became non-finite")
    return value, grad, f, g_norm


def resolve_step_size(objective, z0, cfg, **estimate_kw):
    """Return ``(alpha, L_hat)``; ``L_hat`` is None for explicit step sizes."""
    if cfg.step_size != AUTO:
        return float(cfg.step_size), None
    if not isinstance(objective, InvexObjective):
        raise ValueError("automatic step size needs an InvexObjective")
    from .analysis import estimate_L

    x0, _ = objective.split(z0)
    est = estimate_L(objective, x0, **estimate_kw)
    return cfg.safety / est.L_hat, est.L_hat


def gd_run(objective, start, cfg=None, keep_iterates=False, **estimate_kw):
    """Fixed-step gradient descent ``z <- z - alpha * grad``.

    Stops when the gradient norm reaches ``cfg.grad_tol`` or after
    ``cfg.max_iters`` steps. Raises NonFinite on divergence (non-finite
    values or growth beyond ``1e12`` times the starting value).
    """
    cfg = GdConfig() if cfg is None else cfg
    z = _start_vector(objective, start)
    z0 = z.copy()
    alpha, L_hat = resolve_step_size(objective, z, cfg, **estimate_kw)

    rec = _Recorder(objective, keep_iterates)
    value, grad, f, g_norm = _evaluate(objective, z)
    limit = DIVERGENCE_FACTOR * max(value, np.finfo(float).tiny)
    gnorm = rec.add(0, z, value, grad, f, g_norm, 0.0)
    reason = "max_iters"
    for t in range(1, cfg.max_iters + 1):
        if gnorm <= cfg.grad_tol:
            reason = "grad_tol"
            break
        z_new = z - alpha * grad
        step = float(np.linalg.norm(z_new - z))
        z = z_new
        value, grad, f, g_norm = _evaluate(objective, z)
        if value > limit:
            raise NonFinite(f"gradient descent diverged at iteration {t} (alpha={alpha:.3g})")
        gnorm = rec.add(t, z, value, grad, f, g_norm, step)
    else:
        if gnorm <= cfg.grad_tol:
            reason = "grad_tol"

    return IterationTrace(
        method="gd",
        objective_kind=objective.kind,
        lam=objective.lam,
        step_size=alpha,
        columns=rec.columns(),
        final_point=z,
        start_point=z0,
        reason=reason,
        iterates=np.asarray(rec.iterates) if keep_iterates else None,
        L_hat=L_hat,
    )


def adam_run(objective, start, cfg=None, keep_iterates=False):
    """Full-batch Adam with bias-corrected moment estimates."""
    cfg = AdamConfig() if cfg is None else cfg
    z = _start_vector(objective, start)
    z0 = z.copy()
    m = np.zeros_like(z)
    v = np.zeros_like(z)

    rec = _Recorder(objective, keep_iterates)
    value, grad, f, g_norm = _evaluate(objective, z)
    limit = DIVERGENCE_FACTOR * max(value, np.finfo(float).tiny)
    gnorm = rec.add(0, z, value, grad, f, g_norm, 0.0)
    reason = "max_iters"
    for t in range(1, cfg.max_iters + 1):
        if gnorm <= cfg.grad_tol:
            reason = "grad_tol"
            break
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad * grad
        m_hat = m / (1.0 - cfg.beta1 ** t)
        v_hat = v / (1.0 - cfg.beta2 ** t)
        z_new = z - cfg.step_size * m_hat / (np.sqrt(v_hat) + cfg.eps)
        step = float(np.linalg.norm(z_new - z))
        z = z_new
        value, grad, f, g_norm = _evaluate(objective, z)
        if value > limit:
            raise NonFinite(f"Adam diverged at iteration {t}")
        gnorm = rec.add(t, z, value, grad, f, g_norm, step)
    else:
        if gnorm <= cfg.grad_tol:
            reason = "grad_tol"

    return IterationTrace(
        method="adam",
        objective_kind=objective.kind,
        lam=objective.lam,
        step_size=cfg.step_size,
        columns=rec.columns(),
        final_point=z,
        start_point=z0,
        reason=reason,
        iterates=np.asarray(rec.iterates) if keep_iterates else None,
    )


def p_recursion_check(trace, objective):
    """Replay ``p_{t+1} = p_0 - alpha*lam*sum_{i<=t} (g(x_i) + lam p_i)``.

    Returns the largest deviation between replayed and stored ``p_t``.
    """
    if trace.method != "gd":
        raise InvalidTrace(f"p recursion holds for gradient descent only, got {trace.method!r}")
    if not isinstance(objective, InvexObjective):
        raise InvalidTrace("p recursion needs an InvexObjective")
    if trace.iterates is None or len(trace.iterates) != len(trace):
        raise TraceIncomplete("trace was recorded without iterates (keep_iterates=True)")
    Z = trace.iterates
    X, P = Z[:, : objective.d], Z[:, objective.d:]
    R = np.array([objective.map.value(x) for x in X]) + objective.lam * P
    replay = np.empty_like(P)
    replay[0] = P[0]
    replay[1:] = P[0] - trace.step_size * objective.lam * np.cumsum(R[:-1], axis=0)
    return float(np.max(np.linalg.norm(replay - P, axis=1)))

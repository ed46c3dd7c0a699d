"""Small dense linear algebra helpers.

Everything works on float64 numpy arrays. Vectors are 1-D, matrices 2-D.
"""
import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, NoConvergence, NonFinite, NotFullRowRank, NotSPD

TOL_SOLVE = 1e-12
PIVOT_THRESHOLD = 1e-14


def as_vector(v, name="vector"):
    """Validate and convert ``v`` to a finite, non-empty 1-D float64 array."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionMismatch(f"{name} must have dimension > 0")
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"{name} has non-finite entries")
    return arr


def as_matrix(m, name="matrix"):
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionMismatch(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"{name} has non-finite entries")
    return arr


def cholesky(M):
    """Lower Cholesky factor of an SPD matrix.

    Raises NotSPD when a pivot falls to ``PIVOT_THRESHOLD`` or below
    (relative to the largest diagonal entry).
    """
    M = as_matrix(M)
    n, m = M.shape
    if n != m:
        raise DimensionMismatch(f"expected a square matrix, got {M.shape}")
    scale = max(float(np.max(np.abs(np.diag(M)))), np.finfo(float).tiny)
    L = np.zeros_like(M)
    for j in range(n):
        pivot = M[j, j] - L[j, :j] @ L[j, :j]
        if not pivot > PIVOT_THRESHOLD * scale:
            raise NotSPD(f"non-positive pivot {pivot:.3e} at column {j}")
        L[j, j] = np.sqrt(pivot)
        L[j + 1:, j] = (M[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def spd_solve(M, rhs):
    """Solve ``M z = rhs`` for symmetric positive definite ``M``.

    Uses a Cholesky factorization followed by a round of iterative
    refinement, which keeps the relative residual under ``TOL_SOLVE`` for
    the moderately conditioned systems this package builds.
    """
    M = as_matrix(M)
    rhs = as_vector(rhs, "rhs")
    if M.shape[0] != M.shape[1] or M.shape[0] != rhs.size:
        raise DimensionMismatch(f"cannot solve {M.shape} system with rhs of size {rhs.size}")
    L = cholesky(M)

    def solve(b):
        y = solve_triangular(L, b, lower=True)
        return solve_triangular(L.T, y, lower=False)

    z = solve(rhs)
    for _ in range(2):
        resid = rhs - M @ z
        if np.linalg.norm(resid) <= TOL_SOLVE * np.linalg.norm(rhs):
            break
        z = z + solve(resid)
    return z


def row_pinv_apply(M, v):
    """Return ``M^+ v`` for a full-row-rank ``M`` (n <= m).

    Computed as ``M^T (M M^T)^{-1} v``, the minimum-norm solution of
    ``M z = v``.
    """
    M = as_matrix(M)
    v = as_vector(v, "v")
    n, m = M.shape
    if n > m:
        raise NotFullRowRank(f"{n}x{m} matrix cannot have full row rank")
    if v.size != n:
        raise DimensionMismatch(f"v has size {v.size}, expected {n}")
    try:
        w = spd_solve(M @ M.T, v)
    except NotSPD as exc:
        raise NotFullRowRank(str(exc)) from exc
    return M.T @ w


def extreme_eigs_sym(M):
    """Smallest and largest eigenvalue of a symmetric matrix."""
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got {M.shape}")
    try:
        w = np.linalg.eigvalsh(0.5 * (M + M.T))
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return float(w[0]), float(w[-1])


def gram_extreme_eigs(F):
    """Extreme eigenvalues of ``F F^T`` from the singular values of ``F``.

    Squaring singular values avoids the ``eps * ||F||^2`` absolute error of
    forming the Gram matrix first, so small eigenvalues keep their relative
    accuracy. Rows beyond the column count contribute exact zeros.
    """
    F = as_matrix(F)
    try:
        s = np.linalg.svd(F, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    n, m = F.shape
    smallest = 0.0 if n > m else float(s[-1]) ** 2
    return smallest, float(s[0]) ** 2


def power_iteration(matvec, dim, max_iters=200, rtol=1e-8, v0=None, rng=None):
    """Spectral norm of a symmetric operator given only products ``matvec(v)``.

    Iterates ``v <- Hv / ||Hv||`` and tracks ``||Hv||``, which converges to
    the largest absolute eigenvalue even when it comes as a +/- pair.
    Returns ``(norm_estimate, unit_vector)``.
    """
    if v0 is None:
        rng = np.random.default_rng(0) if rng is None else rng
        v0 = rng.standard_normal(dim)
    v = np.asarray(v0, dtype=np.float64)
    nv = np.linalg.norm(v)
    if nv == 0:
        raise ValueError("power iteration needs a non-zero start vector")
    v = v / nv
    estimate = 0.0
    for _ in range(max_iters):
        w = matvec(v)
        nw = float(np.linalg.norm(w))
        if not np.isfinite(nw):
            raise NonFinite("operator product is not finite")
        if nw == 0.0:
            return 0.0, v
        if abs(nw - estimate) <= rtol * nw:
            return nw, w / nw
        estimate = nw
        v = w / nw
    raise NoConvergence(f"power iteration did not reach rtol={rtol} in {max_iters} iterations")


def krylov_norm(matvec, dim, max_iters=200, rtol=1e-8, v0=None, rng=None):
    """Spectral norm of a symmetric operator from a Krylov subspace.

    Lanczos with full reorthogonalization: the projected matrix
    ``V^T H V`` is symmetrized and its largest absolute eigenvalue ``theta``
    (with Ritz vector ``y``) is the estimate. Stops once the Ritz residual
    ``||H y - theta y||`` is at most ``rtol * |theta|`` or the subspace
    becomes invariant. Like power iteration the estimate is a lower bound,
    but it converges far faster when the top eigenvalues cluster.
    Returns ``(norm_estimate, unit_vector)``.
    """
    if v0 is None:
        rng = np.random.default_rng(0) if rng is None else rng
        v0 = rng.standard_normal(dim)
    v = np.asarray(v0, dtype=np.float64)
    nv = np.linalg.norm(v)
    if nv == 0:
        raise ValueError("Krylov iteration needs a non-zero start vector")
    V = [v / nv]
    HV = []
    for _ in range(min(max_iters, dim)):
        w = matvec(V[-1])
        if not np.all(np.isfinite(w)):
            raise NonFinite("operator product is not finite")
        HV.append(w)
        Vm, HVm = np.array(V), np.array(HV)
        T = Vm @ HVm.T
        evals, evecs = np.linalg.eigh(0.5 * (T + T.T))
        i = int(np.argmax(np.abs(evals)))
        theta, c = float(evals[i]), evecs[:, i]
        y = c @ Vm
        if theta == 0.0 and np.linalg.norm(w) == 0.0:
            return 0.0, y
        resid = np.linalg.norm(c @ HVm - theta * y)
        if resid <= rtol * abs(theta):
            return abs(theta), y
        for _ in range(2):
            w = w - Vm.T @ (Vm @ w)
        nw = np.linalg.norm(w)
        if nw <= 1e-12 * max(abs(theta), 1e-300):
            return abs(theta), y
        V.append(w / nw)
    if len(HV) >= dim:
        return abs(theta), y
    raise NoConvergence(f"Krylov iteration did not reach rtol={rtol} in {max_iters} iterations")

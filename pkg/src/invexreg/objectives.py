"""Plain, l2-regularized and invex-augmented least-squares objectives.

All three share a small interface used by the optimizers: ``dim``,
``value(z)``, ``gradient(z)`` and ``plain_value(z)`` on a flat parameter
vector ``z``. For the invex objective ``z`` stacks ``x`` and ``p``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .linalg import as_vector


@dataclass(frozen=True)
class AugmentedPoint:
    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", as_vector(self.x, "x"))
        object.__setattr__(self, "p", as_vector(self.p, "p"))

    def stack(self):
        return np.concatenate([self.x, self.p])

    @classmethod
    def from_stacked(cls, z, d):
        z = np.asarray(z, dtype=np.float64)
        return cls(z[:d], z[d:])


class PlainObjective:
    """f(x) = 1/2 ||g(x)||^2."""

    kind = "none"
    lam = 0.0

    def __init__(self, gmap):
        self.map = gmap
        self.dim = gmap.input_dim

    def split(self, z):
        return z, None

    def value(self, x):
        r = self.map.value(x)
        return 0.5 * float(r @ r)

    def gradient(self, x):
        return self.map.jacobian(x).T @ self.map.value(x)

    def plain_value(self, z):
        return self.value(z)

    def evaluate(self, x):
        """One map evaluation -> (value, gradient, plain f, ||g(x)||)."""
        g = self.map.value(x)
        J = self.map.jacobian(x)
        f = 0.5 * float(g @ g)
        return f, J.T @ g, f, float(np.sqrt(2.0 * f))


class L2Objective(PlainObjective):
    """f(x) + lam ||x||^2 (penalty without the 1/2)."""

    kind = "l2"

    def __init__(self, gmap, lam):
        super().__init__(gmap)
        if not lam > 0:
            raise ValueError("lambda must be positive")
        self.lam = float(lam)

    def value(self, x):
        x = as_vector(x, "x")
        return super().value(x) + self.lam * float(x @ x)

    def gradient(self, x):
        x = as_vector(x, "x")
        return super().gradient(x) + 2.0 * self.lam * x

    def plain_value(self, z):
        return PlainObjective.value(self, z)

    def evaluate(self, x):
        f, grad, _, g_norm = super().evaluate(x)
        return f + self.lam * float(x @ x), grad + 2.0 * self.lam * x, f, g_norm


class InvexObjective:
    """fhat(x, p) = 1/2 ||g(x) + lam p||^2 over the stacked vector (x, p)."""

    kind = "invex"

    def __init__(self, gmap, lam):
        if not lam > 0:
            raise ValueError("lambda must be positive")
        self.map = gmap
        self.lam = float(lam)
        self.d = gmap.input_dim
        self.n = gmap.output_dim
        self.dim = self.d + self.n

    def _xp(self, pt):
        if isinstance(pt, AugmentedPoint):
            x, p = pt.x, pt.p
        else:
            z = as_vector(pt, "z")
            if z.size != self.dim:
                raise DimensionMismatch(f"stacked point has size {z.size}, expected {self.dim}")
            x, p = z[: self.d], z[self.d:]
        if p.size != self.n:
            raise DimensionMismatch(f"p has size {p.size}, expected {self.n}")
        return x, p

    def split(self, z):
        return self._xp(z)

    def start(self, x0, p0=None):
        """Stacked start point; ``p0`` defaults to zero."""
        x0 = as_vector(x0, "x0")
        p0 = np.zeros(self.n) if p0 is None else as_vector(p0, "p0")
        return AugmentedPoint(x0, p0).stack()

    def residual(self, pt):
        x, p = self._xp(pt)
        return self.map.value(x) + self.lam * p

    def augmented_jacobian(self, x):
        """[J_g(x)  lam I], the Jacobian of g(x) + lam p."""
        return np.hstack([self.map.jacobian(x), self.lam * np.eye(self.n)])

    def value(self, pt):
        r = self.residual(pt)
        return 0.5 * float(r @ r)

    def gradient(self, pt):
        x, p = self._xp(pt)
        r = self.map.value(x) + self.lam * p
        return np.concatenate([self.map.jacobian(x).T @ r, self.lam * r])

    def plain_value(self, pt):
        x, _ = self._xp(pt)
        g = self.map.value(x)
        return 0.5 * float(g @ g)

    def evaluate(self, pt):
        x, p = self._xp(pt)
        g = self.map.value(x)
        r = g + self.lam * p
        grad = np.concatenate([self.map.jacobian(x).T @ r, self.lam * r])
        f = 0.5 * float(g @ g)
        return 0.5 * float(r @ r), grad, f, float(np.sqrt(2.0 * f))


def eval_f(obj, x):
    """Unregularized 1/2 ||g(x)||^2 for any objective's map."""
    g = obj.map.value(x)
    return 0.5 * float(g @ g)


def eval_fhat(obj, pt):
    return obj.value(pt)


def grad_fhat(obj, pt):
    return obj.gradient(pt)


def grad_f(obj, x):
    return obj.map.jacobian(x).T @ obj.map.value(x)


def grad_l2(obj, x):
    return obj.gradient(x)

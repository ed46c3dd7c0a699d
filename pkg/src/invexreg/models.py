"""Differentiable residual maps ``g: R^d -> R^n``.

A map exposes ``value(x)`` and ``jacobian(x)``; every objective in the
package is assembled from these two calls. Synthetic datasets are drawn
with numpy's PCG64 generator (``np.random.default_rng(seed)``), whose
stream and normal sampler are platform independent.
"""
import numpy as np

from .errors import DimensionMismatch, NonFinite
from .linalg import as_matrix, as_vector

FD_STEP = 1e-6


def sigmoid(z):
    # split by sign so neither branch overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class DifferentiableMap:
    """Base class: subclasses set ``input_dim``/``output_dim`` and implement
    ``_value`` and ``_jacobian`` on validated input."""

    input_dim: int
    output_dim: int

    def _check(self, x):
        x = as_vector(x, "x")
        if x.size != self.input_dim:
            raise DimensionMismatch(f"x has size {x.size}, map expects {self.input_dim}")
        return x

    def value(self, x):
        out = self._value(self._check(x))
        if not np.all(np.isfinite(out)):
            raise NonFinite(f"{type(self).__name__}.value produced non-finite output")
        return out

    def jacobian(self, x):
        out = self._jacobian(self._check(x))
        if not np.all(np.isfinite(out)):
            raise NonFinite(f"{type(self).__name__}.jacobian produced non-finite output")
        return out

    def _value(self, x):
        raise NotImplementedError

    def _jacobian(self, x):
        raise NotImplementedError


class AffineMap(DifferentiableMap):
    """g(x) = A x - b."""

    def __init__(self, A, b):
        self.A = as_matrix(A, "A")
        self.b = as_vector(b, "b")
        if self.b.size != self.A.shape[0]:
            raise DimensionMismatch(f"b has size {self.b.size}, A has {self.A.shape[0]} rows")
        self.output_dim, self.input_dim = self.A.shape

    def _value(self, x):
        return self.A @ x - self.b

    def _jacobian(self, x):
        return self.A.copy()


class SigmoidClassifierMap(DifferentiableMap):
    """g(x) = sigmoid(A x) - b with binary labels ``b``."""

    def __init__(self, A, b):
        self.A = as_matrix(A, "A")
        self.b = as_vector(b, "b")
        if self.b.size != self.A.shape[0]:
            raise DimensionMismatch(f"b has size {self.b.size}, A has {self.A.shape[0]} rows")
        if not np.all((self.b == 0.0) | (self.b == 1.0)):
            raise ValueError("labels must be 0 or 1")
        self.output_dim, self.input_dim = self.A.shape

    def _value(self, x):
        return sigmoid(self.A @ x) - self.b

    def _jacobian(self, x):
        s = sigmoid(self.A @ x)
        return (s * (1.0 - s))[:, None] * self.A


class TinyMlpMap(DifferentiableMap):
    """One-hidden-layer tanh network with scalar output, fit to ``(a_i, b_i)``.

    The parameter vector is laid out as ``[W1 (h x d_in, row-major), b1 (h),
    w2 (h), c (1)]`` and the network is ``w2 . tanh(W1 a + b1) + c``.
    """

    def __init__(self, inputs, targets, hidden):
        self.inputs = as_matrix(inputs, "inputs")
        self.targets = as_vector(targets, "targets")
        if self.targets.size != self.inputs.shape[0]:
            raise DimensionMismatch("one target per input row required")
        if hidden < 1:
            raise ValueError("hidden must be >= 1")
        self.hidden = int(hidden)
        self.d_in = self.inputs.shape[1]
        self.output_dim = self.inputs.shape[0]
        self.input_dim = self.hidden * self.d_in + 2 * self.hidden + 1

    def unpack(self, x):
        h, k = self.hidden, self.d_in
        W1 = x[: h * k].reshape(h, k)
        b1 = x[h * k: h * k + h]
        w2 = x[h * k + h: h * k + 2 * h]
        c = x[-1]
        return W1, b1, w2, c

    def predict(self, x, inputs=None):
        inputs = self.inputs if inputs is None else inputs
        W1, b1, w2, c = self.unpack(x)
        return np.tanh(inputs @ W1.T + b1) @ w2 + c

    def _value(self, x):
        return self.predict(x) - self.targets

    def _jacobian(self, x):
        W1, b1, w2, _ = self.unpack(x)
        H = np.tanh(self.inputs @ W1.T + b1)  # (n, h)
        dH = (1.0 - H * H) * w2  # d out / d preactivation
        n = self.output_dim
        dW1 = (dH[:, :, None] * self.inputs[:, None, :]).reshape(n, -1)
        return np.hstack([dW1, dH, H, np.ones((n, 1))])


def fd_jacobian(gmap, x, h=FD_STEP):
    """Central-difference Jacobian; column j is (g(x+h e_j) - g(x-h e_j)) / 2h."""
    if not h > 0:
        raise ValueError("finite-difference step must be positive")
    x = as_vector(x, "x")
    J = np.empty((gmap.output_dim, x.size))
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        J[:, j] = (gmap.value(x + e) - gmap.value(x - e)) / (2.0 * h)
    return J


def synth_classification(n=64, d=8, seed=42):
    """Seeded binary classification data labelled by a planted weight vector.

    Returns the map; the planted vector is kept as ``map.planted``.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, d))
    w_star = rng.standard_normal(d)
    b = (A @ w_star >= 0.0).astype(np.float64)
    gmap = SigmoidClassifierMap(A, b)
    gmap.planted = w_star
    return gmap


def synth_affine(n=20, d=50, seed=7):
    """Gaussian ``A`` (n x d) and ``b``; full row rank with probability one for n <= d."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, d))
    b = rng.standard_normal(n)
    return AffineMap(A, b)


def synth_mlp(n=32, d_in=4, hidden=8, seed=3):
    """Teacher-student regression: targets come from a random network of the
    same shape, so the student can interpolate (min f = 0)."""
    rng = np.random.default_rng(seed)
    inputs = rng.standard_normal((n, d_in))
    gmap = TinyMlpMap(inputs, np.zeros(n), hidden)
    teacher = rng.standard_normal(gmap.input_dim)
    gmap.targets = gmap.predict(teacher)
    gmap.teacher = teacher
    return gmap


def mlp_init(gmap, seed=0, scale=0.5):
    """Seeded starting weights for a TinyMlpMap."""
    rng = np.random.default_rng(seed)
    return scale * rng.standard_normal(gmap.input_dim)

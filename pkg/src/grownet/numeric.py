"""Dense float64 math primitives.

Matrices are C-contiguous float64 numpy arrays of shape (rows, cols);
vectors are 1-D float64 arrays.  Everything here is a pure function; the
layer modules build on these and the test suite checks them against naive
oracles.
"""

import numpy as np

from .errors import ConfigError, NumericalError


def as_matrix(values, rows=None, cols=None):
    """Coerce to a C-contiguous float64 2-D array, optionally checking shape."""
    m = np.ascontiguousarray(values, dtype=np.float64)
    if m.ndim != 2:
        raise ConfigError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if rows is not None and m.shape != (rows, cols):
        raise ConfigError(f"expected shape {(rows, cols)}, got {m.shape}")
    return m


def as_vector(values, length=None):
    """Coerce to a float64 1-D array, optionally checking length."""
    v = np.ascontiguousarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ConfigError(f"expected a 1-D vector, got ndim={v.ndim}")
    if length is not None and v.shape[0] != length:
        raise ConfigError(f"expected length {length}, got {v.shape[0]}")
    return v


def require_finite(arr, what="array"):
    """Raise NumericalError unless every entry of arr is finite."""
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"non-finite values in {what}")
    return arr


def matmul(a, b):
    """Matrix product with an explicit dimension check.

    Raises ConfigError when a.cols != b.rows instead of letting numpy's
    shape error propagate.
    """
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ConfigError(
            f"matmul dimension mismatch: ({a.shape[0]}x{a.shape[1]}) by "
            f"({b.shape[0]}x{b.shape[1]})"
        )
    return a @ b


def relu(x):
    """Elementwise max(0, x)."""
    return np.maximum(x, 0.0)


def relu_grad(x):
    """Derivative of relu at x; the subgradient at exactly 0 is taken as 0."""
    return (x > 0.0).astype(np.float64)


def sigmoid(x):
    """Elementwise logistic function, stable for large |x|."""
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x, axis=-1):
    """Softmax with max-subtraction so huge logits do not overflow."""
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def finite_diff_grad(f, p, h=1e-5):
    """Central-difference gradient of scalar f at parameter array p.

    Perturbs one coordinate at a time: (f(p + h*e_i) - f(p - h*e_i)) / 2h.
    f must return a finite scalar at every probe point.
    """
    if h <= 0:
        raise ConfigError("finite difference step h must be positive")
    p = np.asarray(p, dtype=np.float64)
    grad = np.zeros_like(p)
    flat = grad.ravel()
    probe = p.copy()
    probe_flat = probe.ravel()
    for i in range(probe_flat.size):
        orig = probe_flat[i]
        probe_flat[i] = orig + h
        fp = f(probe)
        probe_flat[i] = orig - h
        fm = f(probe)
        probe_flat[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NumericalError(f"non-finite function value at coordinate {i}")
        flat[i] = (fp - fm) / (2.0 * h)
    return grad

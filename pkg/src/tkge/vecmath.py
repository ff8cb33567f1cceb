"""Dense vector primitives: activations, initialization, gradient oracle.

Everything here operates on plain float64 numpy arrays and is pure; the
finite-difference oracle is the reference every analytic gradient in the
package is checked against.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError, ShapeError

# Slope of the leaky ReLU activation (0.1 leakage).
LEAKY_SLOPE = 0.1

ACTIVATIONS = ("sine", "tanh", "sigmoid", "leaky_relu", "squared_exponential")


def dot3(a, b, c):
    """Sum of the element-wise product of three equal-length vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if not (a.shape == b.shape == c.shape):
        raise ShapeError(f"dot3 shapes differ: {a.shape}, {b.shape}, {c.shape}")
    return float(np.sum(a * b * c))


def l2_norm(a):
    """Euclidean norm."""
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64)))


def _sigmoid(x):
    # exp of a non-positive argument only, so it cannot overflow
    t = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + t), t / (1.0 + t))


def apply_activation(kind, x):
    """Apply the named activation element-wise."""
    x = np.asarray(x, dtype=np.float64)
    if kind == "sine":
        return np.sin(x)
    if kind == "tanh":
        return np.tanh(x)
    if kind == "sigmoid":
        return _sigmoid(x)
    if kind == "leaky_relu":
        return np.where(x >= 0, x, LEAKY_SLOPE * x)
    if kind == "squared_exponential":
        return np.exp(-np.square(x))
    raise ValueError(f"unknown activation {kind!r}")


def activation_grad(kind, x):
    """Derivative of the named activation, element-wise."""
    x = np.asarray(x, dtype=np.float64)
    if kind == "sine":
        return np.cos(x)
    if kind == "tanh":
        t = np.tanh(x)
        return 1.0 - t * t
    if kind == "sigmoid":
        s = _sigmoid(x)
        return s * (1.0 - s)
    if kind == "leaky_relu":
        return np.where(x >= 0, 1.0, LEAKY_SLOPE)
    if kind == "squared_exponential":
        return -2.0 * x * np.exp(-np.square(x))
    raise ValueError(f"unknown activation {kind!r}")


def init_uniform(rng: np.random.Generator, shape, scale):
    """I.i.d. uniform samples in [-scale, scale]."""
    if scale < 0:
        raise ValueError("scale must be non-negative")
    return rng.uniform(-scale, scale, size=shape)


def finite_diff_grad(f, theta, eps=1e-5):
    """Central-difference gradient of a scalar function at ``theta``.

    ``f`` takes a flat float64 vector and returns a scalar. Each coordinate
    is perturbed by ``eps`` in both directions.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    theta = np.asarray(theta, dtype=np.float64).copy()
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        orig = theta.flat[i]
        theta.flat[i] = orig + eps
        fp = f(theta)
        theta.flat[i] = orig - eps
        fm = f(theta)
        theta.flat[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NumericError(f"non-finite value in finite_diff_grad at coordinate {i}")
        grad.flat[i] = (fp - fm) / (2.0 * eps)
    return grad


def grads_close(analytic, numeric, rel_tol=1e-4, abs_tol=1e-7):
    """True if two gradient arrays agree within a relative tolerance.

    The absolute floor absorbs finite-difference noise on near-zero entries.
    """
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    diff = np.abs(analytic - numeric)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    return bool(np.all(diff <= rel_tol * scale + abs_tol))

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def piecewise_linear(seed, n, knots=10):
    rng = np.random.default_rng(seed)
    xs = np.sort(rng.choice(np.arange(1, n - 1), knots, replace=False))
    return np.interp(np.arange(n), np.r_[0, xs, n - 1], rng.normal(size=knots + 2))


def piecewise_constant(seed, n, jumps=4):
    rng = np.random.default_rng(seed)
    edges = np.sort(rng.choice(np.arange(1, n), jumps, replace=False))
    return np.repeat(rng.normal(size=jumps + 1), np.diff(np.r_[0, edges, n]))


def central_diff(fun, x, step=1e-6):
    """Central finite-difference gradient of a scalar function of an array."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += step
        xm[idx] -= step
        grad[idx] = (fun(xp) - fun(xm)) / (2 * step)
    return grad


def dense(op, n):
    """Dense matrix of a linear map by applying it to unit vectors."""
    return np.column_stack([op(e) for e in np.eye(n)])


def rel_err(a, b):
    return np.linalg.norm(np.ravel(a) - np.ravel(b)) / max(np.linalg.norm(np.ravel(b)), 1e-300)

"""Circular convolution, exact adjoints and the multi-order derivative bank.

All operators act on 1D float arrays with periodic boundaries, so every
adjoint is exact and the normal operators built from them are symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp


class KernelLengthError(ValueError):
    """Raised when a kernel is longer than the signal it is applied to."""


class DimensionError(ValueError):
    """Raised when array shapes do not agree."""


def as_signal(g) -> np.ndarray:
    """Return `g` as a finite 1D float64 array."""
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 1 or g.size == 0:
        raise DimensionError(f"signal must be a non-empty 1D sequence, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise ValueError("signal contains non-finite samples")
    return g


@dataclass(frozen=True)
class Kernel:
    """Finite filter; ``taps[origin]`` is the tap aligned with sample x.

    Convolution is ``(g * k)(x) = sum_j taps[j] * g(x - j + origin)``.
    """

    taps: tuple
    origin: int = 0

    def __post_init__(self):
        taps = tuple(float(t) for t in np.ravel(self.taps))
        if not taps:
            raise ValueError("kernel needs at least one tap")
        if not all(np.isfinite(taps)):
            raise ValueError("kernel taps must be finite")
        if not any(taps):
            raise ValueError("kernel must have a nonzero tap")
        if not 0 <= self.origin < len(taps):
            raise ValueError(f"origin {self.origin} outside 0..{len(taps) - 1}")
        object.__setattr__(self, "taps", taps)

    def __len__(self):
        return len(self.taps)

    @classmethod
    def delta(cls) -> "Kernel":
        return cls((1.0,), 0)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.taps)

    @property
    def energy(self) -> float:
        return float(np.sum(self.array ** 2))

    def shifts(self):
        """Yield ``(tap, shift)`` pairs, shift being the ``np.roll`` amount."""
        for j, t in enumerate(self.taps):
            if t != 0.0:
                yield t, j - self.origin

    def matrix(self, n: int) -> sp.csr_matrix:
        """Sparse n x n circulant matrix of ``convolve(., self)``."""
        _check_length(n, self)
        rows = np.arange(n)
        m = sp.csr_matrix((n, n))
        for t, s in self.shifts():
            m = m + sp.csr_matrix((np.full(n, t), (rows, (rows - s) % n)), shape=(n, n))
        return m.tocsr()


def _check_length(n: int, k: Kernel):
    if len(k) > n:
        raise KernelLengthError(f"kernel of length {len(k)} exceeds signal length {n}")


def convolve(g, k: Kernel) -> np.ndarray:
    """Circular convolution of `g` with `k`, aligned on ``k.origin``."""
    g = np.asarray(g, dtype=np.float64)
    _check_length(g.size, k)
    out = np.zeros_like(g)
    for t, s in k.shifts():
        out += t * np.roll(g, s)
    return out


def adjoint_convolve(u, k: Kernel) -> np.ndarray:
    """Circular correlation with `k`; the exact adjoint of :func:`convolve`."""
    u = np.asarray(u, dtype=np.float64)
    _check_length(u.size, k)
    out = np.zeros_like(u)
    for t, s in k.shifts():
        out += t * np.roll(u, -s)
    return out


DERIVATIVE_TAPS = {
    1: (1.0, -1.0),
    2: (1.0, -2.0, 1.0),
    3: (-1.0, 3.0, -3.0, 1.0),
    4: (1.0, -4.0, 6.0, -4.0, 1.0),
}


@dataclass(frozen=True)
class DerivativeBank:
    """Stack of finite-difference filters, one row per derivative order.

    ``DerivativeBank.up_to(K)`` gives orders 1..K; a single-order bank such
    as ``DerivativeBank((2,))`` reduces the multi-order penalty to plain TV2.
    """

    orders: tuple = (1, 2)
    filters: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        orders = tuple(int(p) for p in self.orders)
        if not orders or any(p not in DERIVATIVE_TAPS for p in orders):
            raise ValueError(f"derivative orders must be in 1..4, got {self.orders}")
        if len(set(orders)) != len(orders):
            raise ValueError(f"duplicate derivative orders {orders}")
        object.__setattr__(self, "orders", orders)
        object.__setattr__(self, "filters", tuple(Kernel(DERIVATIVE_TAPS[p], 0) for p in orders))

    @classmethod
    def up_to(cls, K: int) -> "DerivativeBank":
        if not 1 <= K <= 4:
            raise ValueError(f"order K must be in 1..4, got {K}")
        return cls(tuple(range(1, K + 1)))

    @property
    def K(self) -> int:
        return len(self.orders)

    @property
    def max_length(self) -> int:
        return max(len(f) for f in self.filters)

    def matrix(self, n: int) -> sp.csr_matrix:
        """Sparse (K*n) x n matrix; block p is the circulant of filter p."""
        return sp.vstack([f.matrix(n) for f in self.filters]).tocsr()


# order-3 taps are the negated third difference
_SIGN = {1: 1.0, 2: 1.0, 3: -1.0, 4: 1.0}


def derivative_stack(g, bank: DerivativeBank) -> np.ndarray:
    """K x N array whose column x is v(x) = (L * g)(x).

    Rows are built by repeated first differences, which equals convolution
    with the bank taps and maps constants to exact zeros.
    """
    g = np.asarray(g, dtype=np.float64)
    _check_length(g.size, Kernel(DERIVATIVE_TAPS[max(bank.orders)]))
    diffs = [g]
    for _ in range(max(bank.orders)):
        diffs.append(diffs[-1] - np.roll(diffs[-1], 1))
    return np.stack([_SIGN[p] * diffs[p] for p in bank.orders])


def adjoint_derivative_stack(u, bank: DerivativeBank) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2 or u.shape[0] != bank.K:
        raise DimensionError(f"stack shape {u.shape} does not match bank order {bank.K}")
    out = np.zeros(u.shape[1])
    for row, p in zip(u, bank.orders):
        r = _SIGN[p] * row
        for _ in range(p):
            r = r - np.roll(r, -1)
        out += r
    return out


def concat_stacks(stacks: Sequence[np.ndarray]) -> np.ndarray:
    """Augment derivative stacks of several signals along the sample axis."""
    return np.concatenate([np.atleast_2d(s) for s in stacks], axis=1)

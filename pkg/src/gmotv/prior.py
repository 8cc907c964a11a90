"""Multi-order TV penalty parameterised by a structure matrix S.

The penalty is ``R(g, S) = sum_x ||S v(x)||`` over the derivative stack
``v = L g``. Its cross-entropy form adds ``-1/2 log|S S^T|`` and a
Frobenius ridge ``lambda_F/2 ||S||_F^2``. Norms are smoothed as
``sqrt(eps_smooth + ||S v||^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal import DimensionError


class RankError(ValueError):
    """Raised when a structure matrix (or the matrix it is built from) is singular."""


@dataclass(frozen=True)
class PriorConfig:
    lambda_F: float = 0.0
    eps_smooth: float = 1e-10

    def __post_init__(self):
        if self.lambda_F < 0:
            raise ValueError(f"lambda_F must be >= 0, got {self.lambda_F}")
        if not self.eps_smooth > 0:
            raise ValueError(f"eps_smooth must be > 0, got {self.eps_smooth}")


def check_structure(S, K: int | None = None) -> np.ndarray:
    """Validate a structure matrix and return it as a float array."""
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError(f"structure matrix must be square, got shape {S.shape}")
    if K is not None and S.shape[0] != K:
        raise DimensionError(f"structure matrix is {S.shape[0]}x{S.shape[0]}, stack order is {K}")
    if not np.all(np.isfinite(S)):
        raise ValueError("structure matrix has non-finite entries")
    sv = np.linalg.svd(S, compute_uv=False)
    if sv[-1] <= 1e-12 * max(sv[0], np.finfo(float).tiny):
        raise RankError(f"structure matrix is singular (singular values {sv})")
    return S


def _stack(stack) -> np.ndarray:
    return np.atleast_2d(np.asarray(stack, dtype=np.float64))


def smoothed_norms(stack, S, eps_smooth: float) -> np.ndarray:
    """Per-sample ``sqrt(eps + ||S v(x)||^2)``."""
    sv = np.asarray(S) @ _stack(stack)
    return np.sqrt(eps_smooth + np.sum(sv * sv, axis=0))


def logdet_SSt(S) -> float:
    """``log|S S^T|`` from the singular values of S."""
    sv = np.linalg.svd(S, compute_uv=False)
    if sv[-1] <= 0:
        raise RankError("structure matrix is singular")
    return 2.0 * float(np.sum(np.log(sv)))


def penalty_R(stack, S, cfg: PriorConfig = PriorConfig()) -> float:
    stack = _stack(stack)
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    if S.shape != (stack.shape[0], stack.shape[0]):
        raise DimensionError(f"S shape {S.shape} does not match stack order {stack.shape[0]}")
    return float(np.sum(smoothed_norms(stack, S, cfg.eps_smooth)))


def penalty_RF(stack, S, cfg: PriorConfig = PriorConfig()) -> float:
    stack = _stack(stack)
    S = check_structure(S, stack.shape[0])
    return (penalty_R(stack, S, cfg) - 0.5 * logdet_SSt(S)
            + 0.5 * cfg.lambda_F * float(np.sum(S * S)))


def accumulate_A(stack, S, eps_smooth: float) -> np.ndarray:
    """``sum_x v(x) v(x)^T / sqrt(eps + ||S v(x)||^2)``, symmetric PSD."""
    stack = _stack(stack)
    weights = 1.0 / smoothed_norms(stack, S, eps_smooth)
    A = (stack * weights) @ stack.T
    return 0.5 * (A + A.T)


def _grad_from_A(S, A, lambda_F):
    return S @ A - np.linalg.solve(S @ S.T, S) + lambda_F * S


def grad_S_RF(stack, S, cfg: PriorConfig = PriorConfig()) -> np.ndarray:
    """Gradient of :func:`penalty_RF` with respect to S."""
    stack = _stack(stack)
    S = check_structure(S, stack.shape[0])
    return _grad_from_A(S, accumulate_A(stack, S, cfg.eps_smooth), cfg.lambda_F)


def majorized_RF(stack, S, S_anchor, cfg: PriorConfig = PriorConfig()) -> float:
    """Quadratic surrogate of R_F anchored at `S_anchor`.

    Uses ``sqrt(a) <= a / (2 sqrt(b)) + sqrt(b) / 2``, so the surrogate
    touches R_F at ``S = S_anchor`` and lies above it elsewhere.
    """
    stack = _stack(stack)
    S = check_structure(S, stack.shape[0])
    anchor = smoothed_norms(stack, S_anchor, cfg.eps_smooth)
    sq = smoothed_norms(stack, S, cfg.eps_smooth) ** 2
    quad = float(np.sum(0.5 * sq / anchor + 0.5 * anchor))
    return quad - 0.5 * logdet_SSt(S) + 0.5 * cfg.lambda_F * float(np.sum(S * S))


def grad_S_majorized(stack, S, S_anchor, cfg: PriorConfig = PriorConfig()) -> np.ndarray:
    stack = _stack(stack)
    S = check_structure(S, stack.shape[0])
    S_anchor = check_structure(S_anchor, stack.shape[0])
    return _grad_from_A(S, accumulate_A(stack, S_anchor, cfg.eps_smooth), cfg.lambda_F)

"""Structure-matrix estimation by majorization-minimization (MM-KL).

Each step minimises the quadratic surrogate of R_F in closed form:
with ``A_k = U_k diag(d_k) U_k^T`` the update is
``S_{k+1} = (diag(d_k) + lambda_F I)^{-1/2} U_k^T``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .prior import (
    PriorConfig,
    RankError,
    _grad_from_A,
    accumulate_A,
    check_structure,
    penalty_RF,
)

log = logging.getLogger(__name__)

__all__ = [
    "MmKlConfig", "MmKlResult", "accumulate_A", "eig_sym", "mm_kl",
    "save_structure", "load_structure",
]


@dataclass(frozen=True)
class MmKlConfig:
    lambda_F: float = 0.0
    eps_grad: float = 1e-6
    eps_smooth: float = 1e-10
    max_iters: int = 500

    def __post_init__(self):
        if self.lambda_F < 0:
            raise ValueError("lambda_F must be >= 0")
        if not self.eps_grad > 0:
            raise ValueError("eps_grad must be > 0")
        if not self.eps_smooth > 0:
            raise ValueError("eps_smooth must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")

    @property
    def prior(self) -> PriorConfig:
        return PriorConfig(self.lambda_F, self.eps_smooth)


@dataclass(frozen=True)
class MmKlResult:
    S: np.ndarray
    iterations: int
    final_grad_norm: float
    converged: bool
    history: tuple = field(default=(), repr=False)  # R_F at S0, S1, ...


def eig_sym(A, tol: float = 1e-14, max_sweeps: int = 50):
    """Cyclic Jacobi eigendecomposition of a small symmetric matrix.

    Returns ``(U, d)`` with ``A = U diag(d) U^T``, eigenvalues sorted in
    descending order (stable on ties) and each eigenvector's first
    nonzero component positive.
    """
    A = np.array(A, dtype=np.float64)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    scale = max(np.max(np.abs(A)), np.finfo(float).tiny)
    if np.max(np.abs(A - A.T)) > 1e-12 * scale:
        raise ValueError("eig_sym requires a symmetric matrix")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum((A - np.diag(np.diag(A))) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(1.0, theta))
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q], J[q, p] = s, -s
                A = J.T @ A @ J
                A[p, q] = A[q, p] = 0.0
                V = V @ J
    d = np.diag(A).copy()
    order = np.argsort(-d, kind="stable")
    d, V = d[order], V[:, order]
    for i in range(n):
        col = V[:, i]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            V[:, i] = -col
    return V, d


def mm_kl(stack, S0, cfg: MmKlConfig = MmKlConfig()) -> MmKlResult:
    """Minimise R_F(S) over S for a fixed derivative stack.

    Always performs at least one closed-form update, then stops once
    ``||grad_S R_F||_F <= eps_grad`` or after ``max_iters`` updates.
    """
    stack = np.atleast_2d(np.asarray(stack, dtype=np.float64))
    S = check_structure(S0, stack.shape[0])
    prior = cfg.prior
    history = [penalty_RF(stack, S, prior)]
    A = accumulate_A(stack, S, cfg.eps_smooth)
    r = np.inf
    k = 0
    while k < cfg.max_iters:
        U, d = eig_sym(A)
        if cfg.lambda_F == 0.0 and (d[0] <= 0.0 or d[-1] <= 1e-12 * d[0]):
            raise RankError(
                f"derivative matrix A is rank deficient: smallest eigenvalue {d[-1]:.3e} "
                f"(largest {d[0]:.3e}); use lambda_F > 0 or richer training data")
        d = np.maximum(d, 0.0)
        S = (1.0 / np.sqrt(d + cfg.lambda_F))[:, None] * U.T
        A = accumulate_A(stack, S, cfg.eps_smooth)
        k += 1
        history.append(penalty_RF(stack, S, prior))
        r = float(np.linalg.norm(_grad_from_A(S, A, cfg.lambda_F)))
        if r <= cfg.eps_grad:
            break
    converged = r <= cfg.eps_grad
    if not converged:
        log.debug("mm_kl stopped after %d iterations, gradient norm %.3e", k, r)
    return MmKlResult(S, k, r, converged, tuple(history))


def save_structure(path, S) -> None:
    S = check_structure(S)
    K = S.shape[0]
    lines = [str(K)] + [" ".join(f"{x:.17e}" for x in row) for row in S]
    Path(path).write_text("\n".join(lines) + "\n")


def load_structure(path) -> np.ndarray:
    tokens = Path(path).read_text().split()
    if not tokens:
        raise ValueError(f"{path}: empty structure file")
    try:
        K = int(tokens[0])
        values = [float(t) for t in tokens[1:]]
    except ValueError as exc:
        raise ValueError(f"{path}: malformed structure file ({exc})") from None
    if K < 1 or len(values) != K * K:
        raise ValueError(f"{path}: expected {K * K} entries after K={K}, found {len(values)}")
    return check_structure(np.array(values).reshape(K, K), K)

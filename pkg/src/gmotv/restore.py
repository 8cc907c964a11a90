"""Restoration with a fixed structure matrix (MM-GMOTV).

Minimises ``J(g) = 1/2 ||f - h*g||^2 + lam * R(L g, S)`` by
majorization-minimization. Each outer step replaces the smoothed norms
by quadratics anchored at the current iterate and solves the resulting
linear system ``Q g = h(-x) * f`` with diagonally preconditioned CG.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .prior import PriorConfig, check_structure, penalty_R, smoothed_norms
from .signal import (
    DerivativeBank,
    DimensionError,
    Kernel,
    adjoint_convolve,
    adjoint_derivative_stack,
    as_signal,
    convolve,
    derivative_stack,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DegradationModel:
    """Blur kernel of the measurement ``f = h * g + noise``; delta for denoising."""

    h: Kernel = field(default_factory=Kernel.delta)

    def forward(self, g) -> np.ndarray:
        return convolve(g, self.h)

    def adjoint(self, u) -> np.ndarray:
        return adjoint_convolve(u, self.h)


@dataclass(frozen=True)
class RestoreConfig:
    lam: float = 1.0
    eps_q: float = 1e-6
    eps_m: float = 1e-6
    eps_smooth: float = 1e-10
    max_outer: int = 200
    max_cg: int | None = None  # None means 10 * N
    precondition: bool = True

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        for name in ("eps_q", "eps_m", "eps_smooth"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")


@dataclass
class RestoreTrace:
    costs: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    cg_iterations: int = 0
    converged: bool = False

    @property
    def outer_iterations(self) -> int:
        return max(len(self.costs) - 1, 0)


class CGResult(NamedTuple):
    x: np.ndarray
    iterations: int
    residual_norm: float
    converged: bool


def _check_shapes(g, f=None):
    g = as_signal(g)
    if f is not None and np.shape(f) != g.shape:
        raise DimensionError(f"signal lengths differ: {g.shape} vs {np.shape(f)}")
    return g


def cost_J(g, f, model: DegradationModel, S, bank: DerivativeBank, lam: float,
           eps_smooth: float = 1e-10) -> float:
    g = _check_shapes(g, f)
    r = np.asarray(f) - model.forward(g)
    return 0.5 * float(r @ r) + lam * penalty_R(derivative_stack(g, bank), S, PriorConfig(0.0, eps_smooth))


def majorized_cost_J(g, g_anchor, f, model: DegradationModel, S, bank: DerivativeBank,
                     lam: float, eps_smooth: float = 1e-10) -> float:
    """Quadratic surrogate of :func:`cost_J` anchored at `g_anchor`."""
    g = _check_shapes(g, f)
    r = np.asarray(f) - model.forward(g)
    anchor = smoothed_norms(derivative_stack(g_anchor, bank), S, eps_smooth)
    sq = smoothed_norms(derivative_stack(g, bank), S, eps_smooth) ** 2
    return 0.5 * float(r @ r) + lam * float(np.sum(0.5 * sq / anchor + 0.5 * anchor))


def weights(g_bar, S, bank: DerivativeBank, eps_smooth: float = 1e-10) -> np.ndarray:
    """Per-sample ``1 / (2 sqrt(eps + ||S (L g_bar)(x)||^2))``."""
    return 0.5 / smoothed_norms(derivative_stack(g_bar, bank), S, eps_smooth)


def apply_Q(g, g_bar, S, model: DegradationModel, lam: float, bank: DerivativeBank,
            eps_smooth: float = 1e-10) -> np.ndarray:
    """``h(-x)*h*g + lam * L^T{2 w S^T S (L g)}`` with w = weights(g_bar).

    The factor 2 on w makes ``apply_Q(g, g) - h(-x)*f`` the exact gradient
    of :func:`cost_J`.
    """
    g = _check_shapes(g, g_bar)
    S = np.asarray(S, dtype=np.float64)
    u = 2.0 * weights(g_bar, S, bank, eps_smooth)
    reg = adjoint_derivative_stack(u * (S.T @ S @ derivative_stack(g, bank)), bank)
    return model.adjoint(model.forward(g)) + lam * reg


def grad_J(g, f, model: DegradationModel, S, lam: float, bank: DerivativeBank,
           eps_smooth: float = 1e-10) -> np.ndarray:
    g = _check_shapes(g, f)
    return apply_Q(g, g, S, model, lam, bank, eps_smooth) - model.adjoint(f)


def _combined_taps(S, bank: DerivativeBank) -> np.ndarray:
    """Rows i hold the taps of ``p_i^T L`` (all bank filters share origin 0)."""
    taps = np.zeros((bank.K, bank.max_length))
    for p, k in enumerate(bank.filters):
        taps[:, :len(k)] += np.outer(S[:, p], k.array)
    return taps


def precond_diag(g_bar, S, model: DegradationModel, lam: float, bank: DerivativeBank,
                 eps_smooth: float = 1e-10) -> np.ndarray:
    """Diagonal of Q: ``sum h^2 + lam * sum_i (Lhat_i(-x))^2 * (2 w)(x)``."""
    g_bar = as_signal(g_bar)
    S = np.asarray(S, dtype=np.float64)
    u = 2.0 * weights(g_bar, S, bank, eps_smooth)
    reg = np.zeros_like(g_bar)
    for row in _combined_taps(S, bank) ** 2:
        for j, t in enumerate(row):
            if t != 0.0:
                reg += t * np.roll(u, -j)
    return model.h.energy + lam * reg


def assemble_Q(g_bar, S, model: DegradationModel, lam: float, bank: DerivativeBank,
               eps_smooth: float = 1e-10) -> sp.csr_matrix:
    """Sparse matrix of the linear operator ``g -> apply_Q(g, g_bar, ...)``."""
    g_bar = as_signal(g_bar)
    n = g_bar.size
    S = np.asarray(S, dtype=np.float64)
    H = model.h.matrix(n)
    SL = sp.kron(sp.csr_matrix(S), sp.identity(n)) @ bank.matrix(n)
    u = 2.0 * weights(g_bar, S, bank, eps_smooth)
    Q = H.T @ H + lam * (SL.T @ sp.diags(np.tile(u, bank.K)) @ SL)
    return Q.tocsr()


def _pcg(Q, b, x0, Minv, eps_q, max_cg) -> CGResult:
    x = x0.copy()
    r = b - Q @ x
    rnorm = float(np.linalg.norm(r))
    if rnorm < eps_q:
        return CGResult(x, 0, rnorm, True)
    z = r * Minv if Minv is not None else r
    p = z.copy()
    rz = float(r @ z)
    best = (rnorm, x.copy())
    for it in range(1, max_cg + 1):
        Qp = Q @ p
        alpha = rz / float(p @ Qp)
        x += alpha * p
        if it % 50 == 0:
            r = b - Q @ x
        else:
            r -= alpha * Qp
        rnorm = float(np.linalg.norm(r))
        if rnorm < best[0]:
            best = (rnorm, x.copy())
        if rnorm < eps_q:
            return CGResult(x, it, rnorm, True)
        z = r * Minv if Minv is not None else r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return CGResult(best[1], max_cg, best[0], False)


def pcg_solve(b, g_bar, S, model: DegradationModel, lam: float, bank: DerivativeBank,
              eps_q: float = 1e-6, max_cg: int | None = None, x0=None,
              precondition: bool = True, eps_smooth: float = 1e-10) -> CGResult:
    """Solve ``Q_[g_bar, S] g = b`` by (preconditioned) conjugate gradient.

    Stops when ``||Q g - b||_2 < eps_q``. If `max_cg` is exhausted the
    iterate with the smallest residual is returned with ``converged=False``.
    """
    b = _check_shapes(b, g_bar)
    max_cg = 10 * b.size if max_cg is None else max_cg
    x0 = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    Q = assemble_Q(g_bar, S, model, lam, bank, eps_smooth)
    Minv = 1.0 / Q.diagonal() if precondition else None
    return _pcg(Q, b, x0, Minv, eps_q, max_cg)


def mm_gmotv(f, model: DegradationModel, S, bank: DerivativeBank,
             cfg: RestoreConfig = RestoreConfig(), g0=None):
    """Restore `f` with a fixed structure matrix; returns ``(g, trace)``.

    Outer iterations stop once ``||grad_J(g)||_2 < eps_m``; each inner
    solve is warm-started at the current iterate.
    """
    f = as_signal(f)
    S = check_structure(S, bank.K)
    g = f.copy() if g0 is None else _check_shapes(g0, f).copy()
    b = model.adjoint(f)
    max_cg = 10 * f.size if cfg.max_cg is None else cfg.max_cg
    trace = RestoreTrace()
    Minv = None
    for k in range(cfg.max_outer + 1):
        Q = assemble_Q(g, S, model, cfg.lam, bank, cfg.eps_smooth)
        gnorm = float(np.linalg.norm(Q @ g - b))
        trace.costs.append(cost_J(g, f, model, S, bank, cfg.lam, cfg.eps_smooth))
        trace.grad_norms.append(gnorm)
        if gnorm < cfg.eps_m:
            trace.converged = True
            break
        if k == cfg.max_outer:
            break
        if cfg.precondition:
            Minv = 1.0 / Q.diagonal()
        res = _pcg(Q, b, g, Minv, cfg.eps_q, max_cg)
        trace.cg_iterations += res.iterations
        g = res.x
    if not trace.converged:
        log.debug("mm_gmotv: gradient norm %.3e after %d outer steps",
                  trace.grad_norms[-1], trace.outer_iterations)
    return g, trace

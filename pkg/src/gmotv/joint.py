"""Training-free restoration: alternate signal and structure-matrix updates.

Block-coordinate descent on ``J_F(g, S) = 1/2 ||f - h*g||^2 + lam * R_F(L g, S)``.
Step 1 refines g with :func:`mm_gmotv` at fixed S, step 2 refits S to the
derivatives of the new g with :func:`mm_kl`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .mmkl import MmKlConfig, mm_kl
from .prior import PriorConfig, check_structure, grad_S_RF, penalty_RF
from .restore import DegradationModel, RestoreConfig, grad_J, mm_gmotv
from .signal import DerivativeBank, as_signal, derivative_stack

log = logging.getLogger(__name__)

TERMINATION_MODES = ("gradient-norm", "proposition-3")


@dataclass(frozen=True)
class JointConfig:
    lam: float = 1.0
    lambda_F: float = 1e-6
    eps_a: float = 1e-6
    max_alternations: int = 50
    termination_mode: str = "gradient-norm"
    eps_smooth: float = 1e-10
    max_outer: int = 200
    max_cg: int | None = None
    max_kl_iters: int = 500
    update_structure: bool = True

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be > 0")
        if not self.lambda_F > 0:
            raise ValueError("lambda_F must be > 0 so that R_F stays bounded below")
        if not self.eps_a > 0:
            raise ValueError("eps_a must be > 0")
        if self.termination_mode not in TERMINATION_MODES:
            raise ValueError(f"termination_mode must be one of {TERMINATION_MODES}")
        if self.max_alternations < 1:
            raise ValueError("max_alternations must be >= 1")

    def restore_config(self) -> RestoreConfig:
        return RestoreConfig(lam=self.lam, eps_q=self.eps_a, eps_m=self.eps_a,
                             eps_smooth=self.eps_smooth, max_outer=self.max_outer,
                             max_cg=self.max_cg)

    def mmkl_config(self) -> MmKlConfig:
        return MmKlConfig(lambda_F=self.lambda_F, eps_grad=self.eps_a,
                          eps_smooth=self.eps_smooth, max_iters=self.max_kl_iters)


@dataclass
class JointResult:
    g: np.ndarray
    S: np.ndarray
    alternations: int
    JF: list = field(default_factory=list)        # J_F(g_m, S_m), m = 0, 1, ...
    JF_step1: list = field(default_factory=list)  # J_F(g_{m+1}, S_m)
    converged: bool = False
    conditions: list = field(default_factory=list)


def cost_JF(g, f, model: DegradationModel, S, bank: DerivativeBank, lam: float,
            lambda_F: float, eps_smooth: float = 1e-10) -> float:
    g = as_signal(g)
    r = np.asarray(f) - model.forward(g)
    stack = derivative_stack(g, bank)
    return 0.5 * float(r @ r) + lam * penalty_RF(stack, S, PriorConfig(lambda_F, eps_smooth))


def grad_S_JF(g, S, bank: DerivativeBank, lam: float, lambda_F: float,
              eps_smooth: float = 1e-10) -> np.ndarray:
    return lam * grad_S_RF(derivative_stack(g, bank), S, PriorConfig(lambda_F, eps_smooth))


def descent_condition(step, grad_new, grad_old) -> bool:
    """``|<step, grad_new>| < |<step, grad_old>|``; a zero step counts as satisfied."""
    step = np.ravel(step)
    if not np.any(step):
        return True
    return abs(float(step @ np.ravel(grad_new))) < abs(float(step @ np.ravel(grad_old)))


def check_step_conditions(g_prev, g_next, S_prev, S_next, f, model: DegradationModel,
                          bank: DerivativeBank, lam: float, lambda_F: float,
                          eps_smooth: float = 1e-10):
    """Curvature-type conditions on the signal step and the structure step.

    Returns ``(step1_ok, step2_ok)``.
    """
    g_prev, g_next = as_signal(g_prev), as_signal(g_next)
    step1 = descent_condition(
        g_next - g_prev,
        grad_J(g_next, f, model, S_prev, lam, bank, eps_smooth),
        grad_J(g_prev, f, model, S_prev, lam, bank, eps_smooth))
    step2 = descent_condition(
        np.asarray(S_next) - np.asarray(S_prev),
        grad_S_JF(g_next, S_next, bank, lam, lambda_F, eps_smooth),
        grad_S_JF(g_next, S_prev, bank, lam, lambda_F, eps_smooth))
    return step1, step2


def igmotv(f, model: DegradationModel, bank: DerivativeBank,
           cfg: JointConfig = JointConfig(), S0=None) -> JointResult:
    """Jointly estimate the signal and the structure matrix from `f` alone.

    Starts from ``g = f`` and ``S = I`` unless `S0` is given.
    """
    f = as_signal(f)
    S = np.eye(bank.K) if S0 is None else check_structure(S0, bank.K)
    g = f.copy()
    rcfg, kcfg = cfg.restore_config(), cfg.mmkl_config()
    jf = lambda g_, S_: cost_JF(g_, f, model, S_, bank, cfg.lam, cfg.lambda_F, cfg.eps_smooth)
    result = JointResult(g, S, 0, [jf(g, S)])
    for m in range(cfg.max_alternations):
        g_next, _ = mm_gmotv(f, model, S, bank, rcfg, g0=g)
        result.JF_step1.append(jf(g_next, S))
        if cfg.update_structure:
            kl = mm_kl(derivative_stack(g_next, bank), S, kcfg)
            S_next, s_grad = kl.S, kl.final_grad_norm
        else:
            S_next, s_grad = S, 0.0
        result.JF.append(jf(g_next, S_next))
        ok = check_step_conditions(g, g_next, S, S_next, f, model, bank,
                                   cfg.lam, cfg.lambda_F, cfg.eps_smooth)
        result.conditions.append(ok)
        if not all(ok):
            log.warning("alternation %d: descent conditions not met (step1=%s, step2=%s)",
                        m + 1, *ok)
        g_grad = float(np.linalg.norm(grad_J(g_next, f, model, S_next, cfg.lam, bank,
                                             cfg.eps_smooth)))
        g, S = g_next, S_next
        result.alternations = m + 1
        if cfg.termination_mode == "gradient-norm":
            done = g_grad <= cfg.eps_a and s_grad <= cfg.eps_a
        else:
            done = all(ok) and result.JF[-2] - result.JF[-1] <= 1e-9
        if done:
            result.converged = True
            break
    result.g, result.S = g, S
    return result

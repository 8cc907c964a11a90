"""Generalized multi-order total variation restoration of 1D signals."""

from .joint import JointConfig, JointResult, check_step_conditions, cost_JF, igmotv
from .mmkl import MmKlConfig, MmKlResult, eig_sym, load_structure, mm_kl, save_structure
from .prior import (
    PriorConfig,
    RankError,
    accumulate_A,
    grad_S_majorized,
    grad_S_RF,
    majorized_RF,
    penalty_R,
    penalty_RF,
)
from .restore import (
    DegradationModel,
    RestoreConfig,
    RestoreTrace,
    apply_Q,
    cost_J,
    grad_J,
    mm_gmotv,
    pcg_solve,
    precond_diag,
    weights,
)
from .signal import (
    DerivativeBank,
    DimensionError,
    Kernel,
    KernelLengthError,
    adjoint_convolve,
    adjoint_derivative_stack,
    convolve,
    derivative_stack,
)

__version__ = "0.1.0"

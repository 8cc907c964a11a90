from .degrade import add_noise, gaussian_kernel, make_rng
from .experiment import (
    METHODS,
    ExperimentSpec,
    ResultRow,
    ResultTable,
    SolverSettings,
    make_restorer,
    run_experiment,
    train_structure,
    tune_lambda,
)
from .io import load_signal, save_signal
from .metrics import InfiniteISNRError, bsnr_db, isnr, snr_db
from .report import emit_outputs, read_csv, write_csv

"""Perturbed gradient descent on low-rank matrix factorization.

Core pieces: the factorization objective and its Gaussian-smoothed variant
(closed forms for gradients, Hessians and stationary points), deterministic
GD/perturbed-GD iteration with per-step diagnostics, named experiment
presets with sweep aggregation, and an independent numerical verification
suite.
"""

from .descent import (
    DIAGNOSTIC_FIELDS,
    ExplicitInit,
    GaussianInit,
    IterateDiagnostics,
    RunConfig,
    Trajectory,
    diagnostics,
    ema,
    gd_step,
    pgd_step,
    pgd_step_with_noise,
    run,
)
from .errors import (
    DegenerateNoiseError,
    InvalidArgumentError,
    NumericalFailureError,
    UndefinedRatioError,
    UnsupportedRankError,
)
from .landscape import (
    BalanceReport,
    HessianReport,
    ProcrustesResult,
    SmoothedOptima,
    StationaryClass,
    StationaryReport,
    balancedness,
    classify_stationary,
    condition_number_formula,
    hessian_spectrum,
    procrustes_distance,
    rankr_balanced_optimum,
    smoothed_optima_rank1,
)
from .linalg import EigenDecomp, SvdSmall, svd_small, sym_eigen
from .objective import (
    FactorPair,
    GroundTruth,
    NoiseConfig,
    grad,
    hessian_quadratic_form,
    hessian_rank1,
    loss,
    residual,
    smoothed_grad,
    smoothed_loss,
)
from .presets import PRESETS, ExperimentPreset, get_preset
from .rng import Rng, mix_seed
from .serialize import (
    aggregate_stats,
    load_config,
    load_config_bundle,
    load_sweep_summary,
    read_trajectory_csv,
    write_sweep_json,
    write_trajectory_csv,
    write_trajectory_json,
)
from .sweep import SweepResult, run_preset_sweep, run_sweep
from .verify import (
    ORACLE_SEED_TAG,
    VERIFICATION_CHECK_COUNT,
    CheckReport,
    finite_diff_grad,
    finite_diff_quadratic_form,
    monte_carlo_smoothed_loss,
    run_verification_suite,
)

__version__ = "0.1.0"

__all__ = [
    "DIAGNOSTIC_FIELDS",
    "PRESETS",
    "ORACLE_SEED_TAG",
    "VERIFICATION_CHECK_COUNT",
    "BalanceReport",
    "CheckReport",
    "DegenerateNoiseError",
    "EigenDecomp",
    "ExperimentPreset",
    "ExplicitInit",
    "FactorPair",
    "GaussianInit",
    "GroundTruth",
    "HessianReport",
    "InvalidArgumentError",
    "IterateDiagnostics",
    "NoiseConfig",
    "NumericalFailureError",
    "ProcrustesResult",
    "Rng",
    "RunConfig",
    "SmoothedOptima",
    "StationaryClass",
    "StationaryReport",
    "SvdSmall",
    "SweepResult",
    "Trajectory",
    "UndefinedRatioError",
    "UnsupportedRankError",
    "aggregate_stats",
    "balancedness",
    "classify_stationary",
    "condition_number_formula",
    "diagnostics",
    "ema",
    "finite_diff_grad",
    "finite_diff_quadratic_form",
    "gd_step",
    "get_preset",
    "grad",
    "hessian_quadratic_form",
    "hessian_rank1",
    "hessian_spectrum",
    "load_config",
    "load_config_bundle",
    "load_sweep_summary",
    "loss",
    "mix_seed",
    "monte_carlo_smoothed_loss",
    "pgd_step",
    "pgd_step_with_noise",
    "procrustes_distance",
    "rankr_balanced_optimum",
    "read_trajectory_csv",
    "residual",
    "run",
    "run_preset_sweep",
    "run_sweep",
    "run_verification_suite",
    "smoothed_grad",
    "smoothed_loss",
    "smoothed_optima_rank1",
    "svd_small",
    "sym_eigen",
    "write_sweep_json",
    "write_trajectory_csv",
    "write_trajectory_json",
]

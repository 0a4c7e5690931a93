"""Almost-periodicity detection and almost-periodic mild solutions.

The package has two halves that meet in the demo:

* analysis: sample real signals, measure Bohr / Stepanov translation
  distances, find relatively dense sets of almost periods, classify
  regularity (`apfun`, `signals`, `coefficients`);
* solving: diagonal parabolic evolution families with exponential
  dichotomy, a priori constants, the Green-kernel marching solver and the
  Picard fixed point for semilinear problems (`evolution`, `solver`,
  `spectral`), applied to a two-species reaction-diffusion system
  (`lotka`).
"""

from importlib.metadata import PackageNotFoundError, version

from .apfun import (
    AlmostPeriodReport,
    JointScanResult,
    NormKind,
    bochner_transform,
    bohr_distance,
    bohr_norm,
    compose,
    detect_jumps,
    find_almost_periods,
    joint_almost_periods,
    modulus_estimate,
    scan_distance_curve,
    sp_distance,
    sp_norm,
)
from .coefficients import (
    Coefficient,
    Constant,
    CosRecip,
    PiecewiseA,
    PiecewiseB,
    QuasiPeriodicCos,
    Scale,
    SinRecip,
    Sum,
    coefficient_from_dict,
    coefficient_to_dict,
    grid_extremum,
)
from .errors import (
    ApevError,
    BallExitError,
    ConfigError,
    ContractionError,
    ConvergenceError,
    WindowError,
)
from .evolution import (
    AlphaEstimateData,
    CoefficientAntiderivative,
    DichotomyData,
    EvolutionSystem,
)
from .gammafn import gamma, log_gamma
from .lotka import (
    LVDemoBundle,
    LVParams,
    LipschitzBound,
    RhoWindow,
    ScanSpec,
    build_systems,
    lipschitz_bound,
    lv_demo,
    lv_nonlinearity,
    rho_window,
)
from .signals import Break, Signal
from .solver import (
    AnalyticForcing,
    ApSolutionReport,
    Constants,
    ConvergenceReport,
    Forcing,
    GridForcing,
    LinearBoundReport,
    SolveConfig,
    alpha_weighted_signal,
    constants,
    linear_bound_check,
    picard_solve,
    solve_linear,
    verify_ap_solution,
)
from .spectral import SineBasis

try:
    __version__ = version("apev")
except PackageNotFoundError:
    __version__ = "0.0.0"

__all__ = [
    "__version__",
    "AlmostPeriodReport",
    "AlphaEstimateData",
    "AnalyticForcing",
    "ApSolutionReport",
    "ApevError",
    "BallExitError",
    "Break",
    "Coefficient",
    "CoefficientAntiderivative",
    "ConfigError",
    "Constant",
    "Constants",
    "ContractionError",
    "ConvergenceError",
    "ConvergenceReport",
    "CosRecip",
    "DichotomyData",
    "EvolutionSystem",
    "Forcing",
    "GridForcing",
    "JointScanResult",
    "LVDemoBundle",
    "LVParams",
    "LinearBoundReport",
    "LipschitzBound",
    "NormKind",
    "PiecewiseA",
    "PiecewiseB",
    "QuasiPeriodicCos",
    "RhoWindow",
    "Scale",
    "ScanSpec",
    "Signal",
    "SinRecip",
    "SineBasis",
    "SolveConfig",
    "Sum",
    "WindowError",
    "alpha_weighted_signal",
    "bochner_transform",
    "bohr_distance",
    "bohr_norm",
    "build_systems",
    "coefficient_from_dict",
    "coefficient_to_dict",
    "compose",
    "constants",
    "detect_jumps",
    "find_almost_periods",
    "gamma",
    "grid_extremum",
    "joint_almost_periods",
    "linear_bound_check",
    "lipschitz_bound",
    "log_gamma",
    "lv_demo",
    "lv_nonlinearity",
    "modulus_estimate",
    "picard_solve",
    "rho_window",
    "scan_distance_curve",
    "solve_linear",
    "sp_distance",
    "sp_norm",
    "verify_ap_solution",
]

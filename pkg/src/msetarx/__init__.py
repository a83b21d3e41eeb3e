"""Multivariate self-exciting threshold autoregressive models with exogenous input."""

from .estimators import (
    FitConfig,
    FitResult,
    MSETARXRegressor,
    adaptive_fit,
    batch_lse,
    fit,
    recursive_lse,
    residual_diagnostics,
)
from .exceptions import (
    EstimationError,
    ExplosiveTrajectoryError,
    InsufficientRegimeSamples,
    MSETARXError,
    NumericError,
    ShapeError,
    ValidationError,
)
from .linalg import eigen_moduli, least_squares_solve, power_iteration_radius, spectral_radius
from .model import (
    ExogenousSpec,
    ModelSpec,
    RegimeCoefficients,
    ThresholdPartition,
    build_regressor,
    regime_index,
    stack_blocks,
    stack_theta,
    unstack_theta,
    validate_model,
)
from .simulate import (
    SimulationConfig,
    SimulationOutput,
    make_dgp,
    simulate_exogenous,
    simulate_msetarx,
)
from .stationarity import (
    StationarityReport,
    check_regime_stationarity,
    companion_matrix,
    cycle_spectral_radius,
)

__version__ = "0.1.0"

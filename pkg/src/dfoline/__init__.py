"""Derivative-free optimization with bounded-noise oracles.

Gradient estimators built from function values only (Gaussian smoothing and
linear interpolation), a noise-tolerant backtracking line search, the
closed-form accuracy/decrease/complexity bounds that govern them, and a
benchmark harness.
"""

from .core import (
    DFOError,
    EvaluationError,
    NoiseModel,
    Oracle,
    RngStream,
    evaluate,
    wrap_with_noise,
)
from .directions import (
    DirectionSet,
    coordinate_directions,
    gaussian_directions,
    orthonormal_directions,
)
from .estimators import (
    ConditioningError,
    GradientEstimate,
    UndefinedMetricError,
    cgsg,
    gsg,
    interpolation_gradient,
    relative_error,
)
from .bounds import (
    InfeasibleConstantsError,
    LineSearchConstants,
    NoFeasibleSigmaError,
    ProblemConstants,
    alpha_bar,
    convex_gap_bound,
    eta,
    gaussian_smoothing_constants,
    gsg_sample_size,
    gsg_variance_bound,
    interpolation_error_bound,
    moment_identity_check,
    nonconvex_avg_bound,
    sigma_range,
    strongly_convex_certificate,
)
from .optimizer import (
    AdamConfig,
    AdamState,
    EstimatorConfig,
    FixedStepConfig,
    LineSearchConfig,
    LineSearchState,
    OptimizationTrace,
    StallError,
    adam_step,
    armijo_holds,
    backtracking_step,
    minimize,
)
from .testfns import (
    TestFunction,
    corpus,
    get_function,
    quadratic,
    rosenbrock,
    synthetic_sin,
)

__version__ = "0.1.0"

__all__ = [
    "AdamConfig",
    "AdamState",
    "ConditioningError",
    "DFOError",
    "DirectionSet",
    "EstimatorConfig",
    "EvaluationError",
    "FixedStepConfig",
    "GradientEstimate",
    "InfeasibleConstantsError",
    "LineSearchConfig",
    "LineSearchConstants",
    "LineSearchState",
    "NoFeasibleSigmaError",
    "NoiseModel",
    "OptimizationTrace",
    "Oracle",
    "ProblemConstants",
    "RngStream",
    "StallError",
    "TestFunction",
    "UndefinedMetricError",
    "adam_step",
    "alpha_bar",
    "armijo_holds",
    "backtracking_step",
    "cgsg",
    "convex_gap_bound",
    "coordinate_directions",
    "corpus",
    "eta",
    "evaluate",
    "gaussian_directions",
    "gaussian_smoothing_constants",
    "get_function",
    "gsg",
    "gsg_sample_size",
    "gsg_variance_bound",
    "interpolation_error_bound",
    "interpolation_gradient",
    "minimize",
    "moment_identity_check",
    "nonconvex_avg_bound",
    "orthonormal_directions",
    "quadratic",
    "relative_error",
    "rosenbrock",
    "sigma_range",
    "strongly_convex_certificate",
    "synthetic_sin",
    "wrap_with_noise",
]

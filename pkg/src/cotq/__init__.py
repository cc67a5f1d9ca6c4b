"""Conditional center-outward transport quantiles.

Nonparametric multiple-output quantile regression: conditional
center-outward quantile maps, contours, regions, medians, and
regression tubes estimated from i.i.d. samples via weighted discrete
optimal transport.
"""

from .errors import (
    CotqError,
    DataError,
    InfeasibleProblemError,
    InternalConsistencyError,
    InvalidInputError,
    InvalidSpecError,
    OutOfDomainError,
    ResourceLimitError,
    SolverError,
    SolverStallError,
    UnsupportedOracleError,
)
from .grid import GridSpec, SphericalGrid, build_directions, build_grid
from .quantile_map import (
    ConditionalQuantileMap,
    ContourSet,
    MedianRegion,
    extract_targets,
    fit_potentials,
    min_norm_point,
)
from .regression import (
    RegressionConfig,
    Tube,
    auto_queries,
    fit_all,
    fit_at,
    median_curve,
    tube,
)
from .simdata import (
    MODELS,
    ModelSpec,
    conditional_sample,
    gen_banana,
    gen_eyelid,
    gen_spherical,
    generate,
)
from .transport import (
    TransportPlan,
    TransportProblem,
    check_cyclical_monotonicity,
    solve_assignment,
    solve_exact,
)
from .validate import (
    CoverageReport,
    HausdorffReport,
    consistency_curve,
    coverage_suite,
    hausdorff,
)
from .weights import (
    WeightSpec,
    WeightVector,
    co_knn_weights,
    compact_kernel_weights,
    gaussian_weights,
    knn_weights,
    validate_strong_consistency,
)

__version__ = "0.1.0"

__all__ = [
    "CotqError", "DataError", "InfeasibleProblemError", "InternalConsistencyError",
    "InvalidInputError", "InvalidSpecError", "OutOfDomainError", "ResourceLimitError",
    "SolverError", "SolverStallError", "UnsupportedOracleError",
    "GridSpec", "SphericalGrid", "build_directions", "build_grid",
    "ConditionalQuantileMap", "ContourSet", "MedianRegion",
    "extract_targets", "fit_potentials", "min_norm_point",
    "RegressionConfig", "Tube", "auto_queries", "fit_all", "fit_at",
    "median_curve", "tube",
    "MODELS", "ModelSpec", "conditional_sample", "gen_banana", "gen_eyelid",
    "gen_spherical", "generate",
    "TransportPlan", "TransportProblem", "check_cyclical_monotonicity",
    "solve_assignment", "solve_exact",
    "CoverageReport", "HausdorffReport", "consistency_curve", "coverage_suite",
    "hausdorff",
    "WeightSpec", "WeightVector", "co_knn_weights", "compact_kernel_weights",
    "gaussian_weights", "knn_weights", "validate_strong_consistency",
    "__version__",
]

"""End-to-end estimator: weights, transport, and quantile maps per query.

For every query covariate ``x`` the pipeline computes the weight vector
over the sample, solves the transportation problem from the spherical
grid to the weighted responses, and turns the optimal plan into a
:class:`~cotq.quantile_map.ConditionalQuantileMap`.  Contours across a
query list assemble into regression quantile tubes; innermost rings
yield the median curve.

Queries are independent of one another and may be fitted in parallel;
the sample matrices are shared read-only and fitted maps are immutable.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, InvalidSpecError
from .grid import GridSpec, SphericalGrid, build_grid
from .quantile_map import ConditionalQuantileMap, ContourSet
from .transport import TransportProblem, solve_exact
from .weights import WeightSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RegressionConfig:
    """Everything needed to fit conditional quantile maps on a dataset.

    ``regular_conditionals`` declares that the conditional laws are
    assumed to have densities bounded away from 0 and infinity on
    convex supports -- the regularity regime in which estimated
    contours converge to their population counterparts in Hausdorff
    distance.  It is documentation only: nothing is (or could be)
    verified from data, and fitting proceeds identically either way.
    """

    weight_spec: WeightSpec
    grid_spec: GridSpec
    taus: tuple[float, ...]
    queries: np.ndarray
    smoothing: float = 0.0
    regular_conditionals: bool = True

    def __post_init__(self):
        taus = tuple(float(t) for t in self.taus)
        object.__setattr__(self, "taus", taus)
        if not taus:
            raise InvalidSpecError("at least one quantile order is required")
        if any(not 0.0 < t < 1.0 for t in taus):
            raise InvalidSpecError(f"quantile orders must lie in (0, 1), got {taus}")
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise InvalidSpecError(f"quantile orders must be strictly increasing, got {taus}")
        queries = np.atleast_2d(np.asarray(self.queries, dtype=float))
        if queries.shape[0] == 0:
            raise InvalidSpecError("query list must not be empty")
        object.__setattr__(self, "queries", queries)
        if self.smoothing < 0:
            raise InvalidSpecError(f"smoothing must be >= 0, got {self.smoothing}")


@dataclass(frozen=True)
class Tube:
    """Slices of a regression quantile tube: one contour per query."""

    tau: float
    slices: tuple[tuple[np.ndarray, ContourSet], ...] = field(repr=False)

    def __post_init__(self):
        for _, cs in self.slices:
            if cs.tau != self.tau:
                raise InvalidInputError("every slice of a tube must share its order")


def _check_data(X, Y) -> tuple[np.ndarray, np.ndarray]:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] != Y.shape[0]:
        raise InvalidInputError(
            f"X and Y must have the same number of rows, got {X.shape[0]} and {Y.shape[0]}"
        )
    if X.shape[0] < 1:
        raise InvalidInputError("the sample is empty")
    return X, Y


def fit_at(
    x,
    X,
    Y,
    config: RegressionConfig,
    grid: SphericalGrid | None = None,
) -> ConditionalQuantileMap:
    """Fit the conditional quantile map at a single query covariate.

    Deterministic given (data, config).  A conditional sample whose
    weight support is smaller than d+1 points produces a flattened map;
    that is reported as a warning, not an error.
    """
    X, Y = _check_data(X, Y)
    if grid is None:
        grid = build_grid(config.grid_spec)
    if grid.d != Y.shape[1]:
        raise InvalidInputError(
            f"grid dimension {grid.d} does not match response dimension {Y.shape[1]}"
        )
    w = config.weight_spec.compute(x, X)
    support = int(np.count_nonzero(w.values))
    if support < Y.shape[1] + 1:
        logger.warning(
            "degenerate fit at x=%s: only %d sample points carry weight", x, support
        )
    problem = TransportProblem(
        grid.points, np.full(grid.N, grid.mass), Y, w.values
    )
    plan = solve_exact(problem)
    return ConditionalQuantileMap.from_plan(
        grid, plan, Y, query_x=w.query, smoothing=config.smoothing
    )


def fit_all(
    X,
    Y,
    config: RegressionConfig,
    threads: int = 1,
) -> list[ConditionalQuantileMap]:
    """Fit one map per configured query, optionally in parallel.

    Results are returned in query order regardless of thread count.
    """
    X, Y = _check_data(X, Y)
    grid = build_grid(config.grid_spec)
    queries = config.queries
    if threads <= 1 or queries.shape[0] == 1:
        return [fit_at(q, X, Y, config, grid=grid) for q in queries]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fit_at, q, X, Y, config, grid) for q in queries]
        return [f.result() for f in futures]


def tube(
    X,
    Y,
    config: RegressionConfig,
    tau: float,
    maps: list[ConditionalQuantileMap] | None = None,
    threads: int = 1,
) -> Tube:
    """Regression quantile tube of order ``tau`` over the query list."""
    if tau not in config.taus:
        raise InvalidInputError(f"tau={tau!r} is not among the configured orders {config.taus}")
    if maps is None:
        maps = fit_all(X, Y, config, threads=threads)
    slices = tuple((q.copy(), m.contour(tau)) for q, m in zip(config.queries, maps))
    return Tube(tau=float(tau), slices=slices)


def median_curve(
    X,
    Y,
    config: RegressionConfig,
    maps: list[ConditionalQuantileMap] | None = None,
    threads: int = 1,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-query conditional median points."""
    if maps is None:
        maps = fit_all(X, Y, config, threads=threads)
    return [(q.copy(), m.median_region().point) for q, m in zip(config.queries, maps)]


def auto_queries(X, count: int) -> np.ndarray:
    """Equispaced queries spanning the observed covariate range.

    Convenience for the CLI; for multivariate covariates the grid runs
    along each coordinate's range.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if count < 1:
        raise InvalidSpecError(f"query count must be >= 1, got {count}")
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    steps = np.linspace(0.0, 1.0, count)[:, None]
    return lo[None, :] + steps * (hi - lo)[None, :]

"""Statistical validation harness: coverage and contour-recovery checks.

Two desk-scale suites back the library's distributional claims:

* :func:`coverage_suite` fits conditional quantile maps on one training
  sample and measures, by Monte Carlo draws from the exact conditional
  law, the probability content of the estimated regions -- which should
  match their nominal order regardless of the model.
* :func:`consistency_curve` compares estimated contours of the
  spherical model (whose population contours are circles with known
  center and radius) against the analytic truth in Pompeiu-Hausdorff
  distance, across increasing sample sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InvalidInputError, UnsupportedOracleError
from .grid import GridSpec
from .quantile_map import ConditionalQuantileMap
from .regression import RegressionConfig, fit_all
from .simdata import (
    MODELS,
    conditional_sample,
    generate,
    ModelSpec,
    spherical_population_contour,
)
from .weights import WeightSpec

#: Default pairings of sample size with grid size / neighbour count.
DEFAULT_K_FOR_N = {3601: 401, 10_000: 1000, 128_020: 6401}


def hausdorff(A: np.ndarray, B: np.ndarray) -> float:
    """Pompeiu-Hausdorff distance between two finite point sets."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[0] == 0 or B.shape[0] == 0:
        raise InvalidInputError("Hausdorff distance of an empty set")
    if A.shape[1] != B.shape[1]:
        raise InvalidInputError("point sets must share their dimension")
    D = cdist(A, B)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


@dataclass(frozen=True)
class CoverageRow:
    x: float
    tau: float
    coverage: float
    mc: int

    @property
    def abs_error(self) -> float:
        return abs(self.coverage - self.tau)


@dataclass(frozen=True)
class CoverageReport:
    """Empirical conditional coverage of estimated quantile regions."""

    model_id: str
    n: int
    N: int
    seed: int
    rows: tuple[CoverageRow, ...]

    def worst_error(self) -> float:
        return max(r.abs_error for r in self.rows)


@dataclass(frozen=True)
class HausdorffRow:
    x: float
    tau: float
    n: int
    seed: int
    distance: float


@dataclass(frozen=True)
class HausdorffReport:
    """Hausdorff error of estimated contours against analytic truth."""

    model_id: str
    rows: tuple[HausdorffRow, ...]

    def median_by_n(self, tau: float | None = None) -> dict[int, float]:
        out: dict[int, float] = {}
        for n in sorted({r.n for r in self.rows}):
            vals = [
                r.distance
                for r in self.rows
                if r.n == n and (tau is None or r.tau == tau)
            ]
            out[n] = float(np.median(vals))
        return out

    def is_decreasing(self, tau: float | None = None) -> bool:
        med = list(self.median_by_n(tau).values())
        return all(b < a for a, b in zip(med, med[1:]))


def coverage_suite(
    model_id: str,
    n: int,
    N: int,
    weight_spec: WeightSpec,
    taus,
    queries,
    mc: int,
    seed: int = 0,
    grid_spec: GridSpec | None = None,
) -> CoverageReport:
    """Fit at each query on one training set, then measure the fraction
    of fresh conditional draws falling inside each estimated region.

    ``mc`` fresh responses are drawn from the exact conditional law at
    every query (seeded independently per query); use mc >= 1000 for
    meaningful estimates.  ``grid_spec`` overrides the balanced
    factorization of ``N``; factorizations with ``tau * (N_R + 1)``
    just above an integer ``j`` with ``j * N_S = tau * N`` quantize the
    region mass exactly at the orders under test.
    """
    if model_id not in MODELS:
        raise InvalidInputError(f"unknown model {model_id!r}")
    if mc < 1:
        raise InvalidInputError(f"Monte Carlo draw count must be >= 1, got {mc}")
    X, Y = generate(ModelSpec(model_id, n, seed))
    taus = tuple(float(t) for t in taus)
    queries = np.atleast_1d(np.asarray(queries, dtype=float)).ravel()
    if grid_spec is None:
        grid_spec = GridSpec.balanced(N, Y.shape[1])
    elif grid_spec.N != N:
        raise InvalidInputError(f"grid_spec holds {grid_spec.N} points, expected N={N}")
    config = RegressionConfig(
        weight_spec=weight_spec,
        grid_spec=grid_spec,
        taus=taus,
        queries=queries[:, None],
    )
    maps = fit_all(X, Y, config)
    rows = []
    for qi, (x, qmap) in enumerate(zip(queries, maps)):
        draw_seed = np.random.SeedSequence(entropy=seed, spawn_key=(qi,))
        fresh = conditional_sample(model_id, float(x), mc, seed=draw_seed)
        ranks = qmap.rank_many(fresh)
        for tau in taus:
            cov = float(np.mean(ranks <= tau + 1e-12))
            rows.append(CoverageRow(x=float(x), tau=tau, coverage=cov, mc=mc))
    return CoverageReport(model_id=model_id, n=n, N=N, seed=seed, rows=tuple(rows))


def estimated_contour_points(
    qmap: ConditionalQuantileMap, tau: float, per_edge: int = 16
) -> np.ndarray:
    """Finite discretization of the estimated contour.

    Planar contours are closed polylines; each edge is sampled at
    ``per_edge`` points so the Hausdorff comparison sees the curve, not
    just its vertices.  Higher-dimensional contours are point clouds
    and are returned as-is.
    """
    cs = qmap.contour(tau)
    if not cs.closed:
        return cs.vertices
    v = cs.vertices  # closed: last row repeats the first
    t = np.linspace(0.0, 1.0, per_edge, endpoint=False)[:, None]
    segments = [(1.0 - t) * v[i][None, :] + t * v[i + 1][None, :] for i in range(len(v) - 1)]
    return np.vstack(segments)


def consistency_curve(
    model_id: str,
    n_list,
    taus=(0.2, 0.4),
    query_x: float = 0.0,
    k_for_n: dict[int, int] | None = None,
    seeds=(0, 1, 2, 3, 4, 5, 6, 7, 8, 9),
    contour_points: int = 512,
    grid_for_k: dict[int, GridSpec] | None = None,
) -> HausdorffReport:
    """Hausdorff error of estimated contours across sample sizes.

    Only the spherical model has analytic population contours (circles
    centered at (x, x^2) with radius sigma(x) * sqrt(-2 ln(1-tau)));
    other models raise :class:`UnsupportedOracleError`.  For each n the
    neighbour count / grid size defaults to the pairing in
    :data:`DEFAULT_K_FOR_N`, falling back to ``round(n ** 0.6)``.
    """
    if model_id != "spherical":
        raise UnsupportedOracleError(
            f"no analytic contour is available for model {model_id!r}"
        )
    lookup = dict(DEFAULT_K_FOR_N)
    if k_for_n:
        lookup.update(k_for_n)
    taus = tuple(float(t) for t in taus)
    rows = []
    for n in n_list:
        k = lookup.get(int(n), max(32, int(round(float(n) ** 0.6))))
        gspec = (grid_for_k or {}).get(k) or GridSpec.balanced(k, 2)
        for seed in seeds:
            X, Y = generate(ModelSpec("spherical", int(n), int(seed)))
            config = RegressionConfig(
                weight_spec=WeightSpec(scheme="knn", k=k),
                grid_spec=gspec,
                taus=taus,
                queries=np.array([[query_x]]),
            )
            qmap = fit_all(X, Y, config)[0]
            for tau in taus:
                est = estimated_contour_points(qmap, tau)
                ref = spherical_population_contour(query_x, tau, contour_points)
                rows.append(
                    HausdorffRow(
                        x=float(query_x),
                        tau=tau,
                        n=int(n),
                        seed=int(seed),
                        distance=hausdorff(est, ref),
                    )
                )
    return HausdorffReport(model_id=model_id, rows=tuple(rows))

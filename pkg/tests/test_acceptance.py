"""Acceptance gate: every release-blocking criterion at its stated
tolerance, one pass/fail line per criterion (run with ``pytest -s``).

The statistical criteria pin their training seeds, so together with the
deterministic solver every run reproduces the same numbers bit for bit.
"""

import time
import numpy as np
import pytest
from scipy.spatial import ConvexHull

from conftest import brute_force_transport_objective
from cotq.cli import cli
from cotq.grid import GridSpec
from cotq.quantile_map import ConditionalQuantileMap
from cotq.regression import RegressionConfig, fit_all
from cotq.simdata import (
    MODELS,
    ModelSpec,
    generate,
    spherical_contour_radius,
)
from cotq.transport import (
    DUAL_FEAS_TOL,
    TransportProblem,
    check_cyclical_monotonicity,
    cycle_sums,
    solve_exact,
)
from cotq.validate import consistency_curve, coverage_suite
from cotq.weights import WeightSpec, co_knn_weights, knn_weights

GRID_1000 = GridSpec(d=2, N_R=25, N_S=40)   # quantizes {0.2, 0.4, 0.8} exactly
GRID_401 = GridSpec(d=2, N_R=20, N_S=20, N_0=1)
TAUS = (0.2, 0.4, 0.8)


def report(num, passed, detail):
    status = "PASS" if passed else "FAIL"
    print(f"\nACCEPTANCE {num} {status}: {detail}")
    assert passed, f"criterion {num}: {detail}"


_GRIDS = {}


def _grid(spec):
    from cotq.grid import build_grid

    if spec not in _GRIDS:
        _GRIDS[spec] = build_grid(spec)
    return _GRIDS[spec]


def fit_model_map(model_id, n, k, grid_spec, seed, query_x):
    """Fit one conditional map, returning both the map and its plan."""
    X, Y = generate(ModelSpec(model_id, n, seed))
    grid = _grid(grid_spec)
    w = WeightSpec(scheme="knn", k=k).compute([query_x], X)
    plan = solve_exact(
        TransportProblem(grid.points, np.full(grid.N, grid.mass), Y, w.values)
    )
    qmap = ConditionalQuantileMap.from_plan(grid, plan, Y, query_x=[query_x])
    return qmap, plan


# ----------------------------------------------------------------------
# shared fitted maps (criteria 2-5)
# ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def maps_c2():
    """50 maps across the three models: n=2000, k=N=500."""
    t0 = time.perf_counter()
    grid_500 = GridSpec.balanced(500, 2)
    configs = []
    queries = {"spherical": (-1.8, -0.9, 0.0, 0.9, 1.8),
               "banana": (-1.5, -0.5, 0.5, 1.5),
               "eyelid": (-0.8, -0.3, 0.2, 0.7)}
    seed = 0
    while len(configs) < 50:
        for model_id in MODELS:
            for x in queries[model_id]:
                configs.append((model_id, x, seed))
        seed += 1
    configs = configs[:50]
    fitted = [
        fit_model_map(m, 2000, 500, grid_500, s, x) for (m, x, s) in configs
    ]
    return fitted, time.perf_counter() - t0


@pytest.fixture(scope="module")
def maps_c3():
    """Maps behind the coverage criterion: spherical, n=1e4, k=N=1e3."""
    return [
        fit_model_map("spherical", 10_000, 1000, GRID_1000, 0, x)[0]
        for x in (-2.0, -1.0, 0.0, 1.0, 2.0)
    ]


@pytest.fixture(scope="module")
def maps_c4():
    """Maps behind the contour-recovery criterion (both sample sizes)."""
    out = []
    for n, k, gspec in ((3601, 401, GRID_401), (10_000, 1000, GRID_1000)):
        for seed in range(10):
            out.append(fit_model_map("spherical", n, k, gspec, seed, 0.0)[0])
    return out


# ----------------------------------------------------------------------
# criteria
# ----------------------------------------------------------------------


def test_criterion_1_lp_exactness():
    t0 = time.perf_counter()
    rng = np.random.Generator(np.random.Philox(2024))
    checked = 0
    worst_gap = 0.0
    while checked < 200:
        N = int(rng.integers(1, 7))
        n = int(rng.integers(1, 7))
        if N * n > 36:
            continue
        budget = 9 if N * n > 25 else 12
        supply = rng.integers(1, 4, size=N)
        while supply.sum() > budget:
            supply[np.argmax(supply)] -= 1
        demand = np.zeros(n, dtype=int)
        for _ in range(int(supply.sum())):
            demand[rng.integers(n)] += 1
        total = float(supply.sum())
        prob = TransportProblem(
            rng.normal(size=(N, 2)), supply / total,
            rng.normal(size=(n, 2)), demand / total,
        )
        plan = solve_exact(prob)
        ref = brute_force_transport_objective(prob.cost_matrix, supply, demand) / total
        worst_gap = max(worst_gap, abs(plan.objective - ref))
        assert abs(plan.objective - ref) <= 1e-10
        reduced = prob.cost_matrix - plan.dual_source[:, None] - plan.dual_target[None, :]
        assert reduced.min() >= -DUAL_FEAS_TOL
        assert np.abs(reduced[plan.source_idx, plan.target_idx]).max() <= DUAL_FEAS_TOL
        checked += 1
    elapsed = time.perf_counter() - t0
    report(
        1,
        checked == 200 and elapsed < 10.0,
        f"200 brute-force matches, worst objective gap {worst_gap:.2e}, "
        f"duals within {DUAL_FEAS_TOL:g}, {elapsed:.1f}s (< 10s)",
    )


def test_criterion_2_cyclical_monotonicity(maps_c2):
    fitted, fit_seconds = maps_c2
    t0 = time.perf_counter()
    worst = -np.inf
    for idx, (qmap, plan) in enumerate(fitted):
        assert check_cyclical_monotonicity(plan, 6, 10_000, seed=idx, slack=1e-8)
        rng = np.random.Generator(np.random.Philox(900 + idx))
        cycles = rng.integers(0, qmap.grid.N, size=(10_000, 6))
        sums = cycle_sums(qmap.grid.points, qmap.targets, cycles)
        worst = max(worst, float(sums.max()))
        assert sums.max() <= 1e-8
    elapsed = time.perf_counter() - t0 + fit_seconds
    report(
        2,
        len(fitted) == 50 and elapsed < 120.0,
        f"50 maps x 1e4 cycles (plans and graphs), worst cycle sum {worst:.2e} "
        f"<= 1e-8, {elapsed:.1f}s (< 2min)",
    )


def test_criterion_3_coverage():
    t0 = time.perf_counter()
    rep = coverage_suite(
        "spherical", n=10_000, N=1000,
        weight_spec=WeightSpec(scheme="knn", k=1000),
        taus=TAUS, queries=(-2.0, -1.0, 0.0, 1.0, 2.0),
        mc=10_000, seed=0, grid_spec=GRID_1000,
    )
    elapsed = time.perf_counter() - t0
    worst = rep.worst_error()
    report(
        3,
        worst <= 0.05 and elapsed < 600.0,
        f"coverage at 5 queries x 3 orders, worst |cov - tau| = {worst:.4f} "
        f"(<= 0.05), {elapsed:.1f}s (< 10min)",
    )


def test_criterion_4_contour_recovery():
    t0 = time.perf_counter()
    assert spherical_contour_radius(0.2) == pytest.approx(0.6680, abs=2e-4)
    assert spherical_contour_radius(0.4) == pytest.approx(1.0108, abs=2e-4)
    rep = consistency_curve(
        "spherical", n_list=(3601, 10_000), taus=(0.2, 0.4), query_x=0.0,
        seeds=tuple(range(10)),
        grid_for_k={1000: GRID_1000, 401: GRID_401},
    )
    per_seed = {}
    for r in rep.rows:
        if r.n == 10_000:
            per_seed.setdefault(r.seed, []).append(r.distance)
    good_seeds = sum(1 for v in per_seed.values() if max(v) <= 0.25)
    med_02 = rep.median_by_n(0.2)
    med_04 = rep.median_by_n(0.4)
    med_all = rep.median_by_n()
    medians_drop = (
        med_02[10_000] < med_02[3601]
        and med_04[10_000] < med_04[3601]
        and med_all[10_000] < med_all[3601]
    )
    elapsed = time.perf_counter() - t0
    report(
        4,
        good_seeds >= 8 and medians_drop and elapsed < 900.0,
        f"Hausdorff <= 0.25 in {good_seeds}/10 seeds (>= 8); median error "
        f"n=1e4 {med_all[10_000]:.3f} < n=3601 {med_all[3601]:.3f}; "
        f"{elapsed:.1f}s (< 15min)",
    )


def test_criterion_5_no_quantile_crossing(maps_c2, maps_c3, maps_c4):
    fitted_c2, _ = maps_c2
    all_maps = [m for m, _ in fitted_c2] + list(maps_c3) + list(maps_c4)
    violations = 0
    checked = 0
    for qmap in all_maps:
        contours = {t: qmap.contour(t).distinct_vertices() for t in TAUS}
        for t1, t2 in ((0.2, 0.4), (0.4, 0.8), (0.2, 0.8)):
            inside = qmap.region_contains_many(contours[t1], t2)
            checked += inside.size
            violations += int((~inside).sum())
    report(
        5,
        violations == 0,
        f"{len(all_maps)} maps, {checked} vertex/region membership checks, "
        f"{violations} violations (0 allowed)",
    )


def test_criterion_6_weight_contract():
    t0 = time.perf_counter()
    rng = np.random.Generator(np.random.Philox(606))
    specs = (
        WeightSpec(scheme="gaussian", h=0.3),
        WeightSpec(scheme="gaussian", h=2.0),
        WeightSpec(scheme="epanechnikov", h=1.0),
        WeightSpec(scheme="uniform", h=1.5),
        WeightSpec(scheme="knn", k=1),
        WeightSpec(scheme="knn", k=5),
        WeightSpec(scheme="co_knn", k=3),
    )
    for draw in range(10_000):
        spec = specs[draw % len(specs)]
        m = int(rng.integers(1, 4))
        n = int(rng.integers(max(5, spec.k or 1), 26))
        X = rng.normal(size=(n, m)) * rng.uniform(0.2, 4.0)
        x = rng.normal(size=m) * 2.0
        w = spec.compute(x, X)
        assert np.all(w.values >= 0.0)
        assert abs(w.values.sum() - 1.0) <= 1e-12
    # univariate center-outward neighbours coincide with plain k-NN
    mismatches = 0
    for draw in range(1000):
        n = int(rng.integers(2, 50))
        X = np.sort(rng.normal(size=(n, 1)) * rng.uniform(0.5, 5.0), axis=0)
        if np.unique(X).size < n:
            continue
        x = rng.normal() * 2.0
        k = int(rng.integers(1, n + 1))
        a = co_knn_weights([x], X, k)
        b = knn_weights([x], X, k)
        if not np.array_equal(a.values, b.values):
            mismatches += 1
    elapsed = time.perf_counter() - t0
    report(
        6,
        mismatches == 0,
        f"1e4 draws satisfy the weight contract (sum within 1e-12); "
        f"m=1 co_knn == knn exactly on 1000 tie-free draws; {elapsed:.1f}s",
    )


def test_criterion_7_banana_shape():
    t0 = time.perf_counter()
    X, Y = generate(ModelSpec("banana", 10_000, 0))
    config = RegressionConfig(
        weight_spec=WeightSpec(scheme="knn", k=1000),
        grid_spec=GRID_1000,
        taus=(0.8,),
        queries=np.array([[0.0]]),
    )
    qmap = fit_all(X, Y, config)[0]
    verts = qmap.contour(0.8).distinct_vertices()
    margins = []
    for i in range(len(verts)):
        others = np.delete(verts, i, axis=0)
        hull = ConvexHull(others)
        margins.append(
            float(np.min(-(hull.equations[:, :2] @ verts[i] + hull.equations[:, 2])))
        )
    best = max(margins)
    elapsed = time.perf_counter() - t0
    report(
        7,
        best > 0.05,
        f"non-convex contour: deepest vertex {best:.3f} inside the hull of "
        f"the others (> 0.05), {elapsed:.1f}s",
    )


def test_criterion_8_determinism(tmp_path):
    t0 = time.perf_counter()
    data = tmp_path / "data.csv"
    assert cli(["simulate", "spherical", "--n", "1200", "--seed", "9",
                "--out", str(data)]) == 0
    fit_args = [
        "fit", "--data", str(data), "--x-columns", "x", "--y-columns", "y1,y2",
        "--scheme", "knn", "--k", "200", "--taus", "0.2,0.4,0.8",
        "--queries=-1;0;1", "--seed", "0",
    ]
    val_args = [
        "validate", "--suite", "coverage", "--model", "spherical",
        "--n", "1200", "--N", "300", "--mc", "2000",
        "--taus", "0.2,0.4", "--queries=-1,0,1", "--seed", "4",
    ]
    pairs = []
    for tag, args in (("fit", fit_args), ("val", val_args)):
        d1, d2 = tmp_path / f"{tag}1", tmp_path / f"{tag}2"
        assert cli(args + ["--out", str(d1)]) == 0
        assert cli(args + ["--out", str(d2)]) == 0
        names = sorted(
            p.name for p in d1.iterdir() if p.suffix in (".csv", ".json")
        )
        assert names
        for name in names:
            pairs.append((d1 / name, d2 / name))
    identical = all(a.read_bytes() == b.read_bytes() for a, b in pairs)
    elapsed = time.perf_counter() - t0
    report(
        8,
        identical,
        f"{len(pairs)} CSV/JSON outputs byte-identical across reruns of "
        f"fit and validate, {elapsed:.1f}s",
    )

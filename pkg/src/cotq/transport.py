"""Exact discrete optimal transport between weighted point clouds.

The central object is the linear transportation problem with
half-squared-Euclidean cost

    min sum_ij 0.5 * |Y_j - G_i|^2 * pi_ij
    s.t. rows sum to the source masses, columns to the target masses,
         pi >= 0,

solved exactly by the network simplex in :mod:`cotq._netsimplex`.  A
single engine covers both the weighted problem (sources with mass 1/N
against arbitrary non-negative target weights) and the assignment
problem between equal-size point sets, whose basic optimal solutions
are permutations.

Solutions come back as :class:`TransportPlan`: the sparse support of a
basic optimal solution plus node potentials certifying optimality via
complementary slackness.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial.distance import cdist

from . import _netsimplex
from .errors import (
    InfeasibleProblemError,
    InternalConsistencyError,
    InvalidInputError,
    ResourceLimitError,
    SolverStallError,
)

logger = logging.getLogger(__name__)

#: Tolerance on |sum of source masses - sum of target masses|.
MASS_BALANCE_TOL = 1e-9
#: Tolerance used when asserting dual feasibility / complementary slackness.
DUAL_FEAS_TOL = 1e-9
#: Slack allowed in the cycle-sum inequality of cyclical monotonicity.
CYCLE_SLACK_TOL = 1e-8
#: Relative pivot tolerance of the simplex (scaled by 1 + max cost).
PIVOT_TOL = 1e-11
#: Hard cap on dense cost matrices; larger problems are refused.  With
#: nearest-neighbour weights the effective target count is k, which keeps
#: realistic problems far below the cap.
MAX_DENSE_COST_ENTRIES = 40_000_000


@dataclass(frozen=True)
class TransportProblem:
    """A balanced transportation instance between two point clouds.

    ``cost_mode`` selects how arc costs are evaluated: ``"auto"``
    materializes the dense matrix and refuses instances above
    :data:`MAX_DENSE_COST_ENTRIES`, ``"dense"`` forces materialization,
    and ``"lazy"`` computes costs on the fly inside the solver (linear
    memory; intended for very large instances).
    """

    sources: np.ndarray
    source_mass: np.ndarray
    targets: np.ndarray
    target_mass: np.ndarray
    cost_mode: str = "auto"

    def __post_init__(self):
        sources = np.ascontiguousarray(np.atleast_2d(np.asarray(self.sources, dtype=float)))
        targets = np.ascontiguousarray(np.atleast_2d(np.asarray(self.targets, dtype=float)))
        a = np.asarray(self.source_mass, dtype=float).ravel()
        b = np.asarray(self.target_mass, dtype=float).ravel()
        object.__setattr__(self, "sources", sources)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "source_mass", a)
        object.__setattr__(self, "target_mass", b)
        if sources.shape[0] != a.shape[0] or targets.shape[0] != b.shape[0]:
            raise InvalidInputError("mass vectors must match the point counts")
        if sources.shape[1] != targets.shape[1]:
            raise InvalidInputError(
                f"dimension mismatch: sources are {sources.shape[1]}-d, "
                f"targets are {targets.shape[1]}-d"
            )
        if np.any(a < 0) or np.any(b < 0):
            raise InvalidInputError("masses must be non-negative")
        if abs(a.sum() - b.sum()) > MASS_BALANCE_TOL:
            raise InfeasibleProblemError(
                f"marginals do not balance: sources carry {a.sum()!r}, "
                f"targets {b.sum()!r}"
            )
        if self.cost_mode not in ("auto", "dense", "lazy"):
            raise InvalidInputError(f"unknown cost mode {self.cost_mode!r}")

    @property
    def N(self) -> int:
        return self.sources.shape[0]

    @property
    def n(self) -> int:
        return self.targets.shape[0]

    def cost_entry(self, i: int, j: int) -> float:
        diff = self.targets[j] - self.sources[i]
        return 0.5 * float(diff @ diff)

    @cached_property
    def cost_matrix(self) -> np.ndarray:
        """Dense ``N x n`` matrix of costs ``0.5 |Y_j - G_i|^2``."""
        if self.N * self.n > MAX_DENSE_COST_ENTRIES:
            raise ResourceLimitError(
                f"dense cost matrix would hold {self.N * self.n} entries "
                f"(cap {MAX_DENSE_COST_ENTRIES}); use nearest-neighbour "
                "weights to bound the effective sample size"
            )
        return 0.5 * cdist(self.sources, self.targets, "sqeuclidean")


@dataclass(frozen=True)
class TransportPlan:
    """Sparse basic optimal solution of a transportation problem.

    The index/mass arrays hold the strictly positive support, sorted by
    (i, j); ``dual_source``/``dual_target`` are potentials with
    ``f_i + g_j <= c_ij`` everywhere and equality on the support.
    Target indices refer to the original problem even when zero-weight
    targets were dropped before solving (their ``dropped`` indices are
    reported and their dual values set to the tightest feasible bound).
    """

    problem: TransportProblem
    source_idx: np.ndarray
    target_idx: np.ndarray
    mass: np.ndarray
    objective: float
    dual_source: np.ndarray
    dual_target: np.ndarray
    dropped: np.ndarray
    pivots: int = field(default=0, compare=False)

    @property
    def n_entries(self) -> int:
        return self.mass.shape[0]

    def support_points(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates (G_i, Y_j) of every support pair."""
        return (
            self.problem.sources[self.source_idx],
            self.problem.targets[self.target_idx],
        )

    def row_sums(self) -> np.ndarray:
        out = np.zeros(self.problem.N)
        np.add.at(out, self.source_idx, self.mass)
        return out

    def col_sums(self) -> np.ndarray:
        out = np.zeros(self.problem.n)
        np.add.at(out, self.target_idx, self.mass)
        return out

    def to_dense(self) -> np.ndarray:
        """Dense plan matrix; intended for small problems in tests."""
        out = np.zeros((self.problem.N, self.problem.n))
        out[self.source_idx, self.target_idx] = self.mass
        return out

    def rows_support(self) -> list[np.ndarray]:
        """Per-source arrays of positions into the entry arrays."""
        order = np.argsort(self.source_idx, kind="stable")
        bounds = np.searchsorted(self.source_idx[order], np.arange(self.problem.N + 1))
        return [order[bounds[i]:bounds[i + 1]] for i in range(self.problem.N)]


def solve_exact(problem: TransportProblem, max_pivots: int | None = None) -> TransportPlan:
    """Solve the transportation LP exactly.

    Deterministic: the pivot rule is a fixed-order block search, so
    identical problems yield the identical basic solution.  Targets with
    exactly zero mass are dropped before solving and reported on the
    plan.  Raises :class:`SolverStallError` when the pivot cap is hit.
    """
    keep = np.flatnonzero(problem.target_mass > 0.0)
    dropped = np.flatnonzero(problem.target_mass == 0.0)
    if dropped.size:
        logger.info("dropping %d zero-weight targets before solving", dropped.size)
    if keep.size == 0:
        raise InfeasibleProblemError("every target has zero mass")

    a = np.ascontiguousarray(problem.source_mass)
    b = np.ascontiguousarray(problem.target_mass[keep])
    N = problem.N
    n = keep.size
    dense = problem.cost_mode != "lazy"
    if problem.cost_mode == "auto" and N * problem.n > MAX_DENSE_COST_ENTRIES:
        raise ResourceLimitError(
            f"dense cost matrix would hold {N * problem.n} entries "
            f"(cap {MAX_DENSE_COST_ENTRIES}); use nearest-neighbour weights "
            "to bound the effective sample size, or cost_mode='lazy'"
        )
    tgt_kept = np.ascontiguousarray(problem.targets[keep])
    if dense:
        cost = np.ascontiguousarray(problem.cost_matrix[:, keep])
        src_pts = np.zeros((1, 1))
        tgt_pts = np.zeros((1, 1))
    else:
        cost = np.zeros((1, 1))
        src_pts = np.ascontiguousarray(problem.sources)
        tgt_pts = tgt_kept
    if max_pivots is None:
        max_pivots = max(20_000, 300 * (N + n))

    parent, up, tflow, pot, status, pivots = _netsimplex.network_simplex(
        cost, src_pts, tgt_pts, dense, a, b, 0, PIVOT_TOL, max_pivots
    )
    if status == _netsimplex.STATUS_STALLED:
        raise SolverStallError(
            f"pivot cap {max_pivots} exceeded on a {N}x{n} problem "
            f"(pivots={pivots}); the instance may be badly scaled"
        )
    if status != _netsimplex.STATUS_OK:
        raise InternalConsistencyError(f"solver returned status {status}")

    root = N + n
    src = []
    tgt = []
    mass = []
    objective = 0.0
    for v in range(N + n):
        p = parent[v]
        f = tflow[v]
        if p == root:
            if f > MASS_BALANCE_TOL:
                raise InfeasibleProblemError(
                    f"residual artificial flow {f!r}; marginals are inconsistent"
                )
            continue
        if f > 0.0:
            i, j = (v, p - N) if v < N else (p, v - N)
            src.append(i)
            tgt.append(j)
            mass.append(f)
            diff = tgt_kept[j] - problem.sources[i]
            objective += f * 0.5 * float(diff @ diff)

    src = np.asarray(src, dtype=np.int64)
    tgt = np.asarray(tgt, dtype=np.int64)
    mass = np.asarray(mass, dtype=float)
    order = np.lexsort((tgt, src))
    src, tgt, mass = src[order], tgt[order], mass[order]

    f_dual = pot[:N].copy()
    g_dual = np.empty(problem.n)
    g_dual[keep] = -pot[N:N + n]
    if dropped.size:
        cost_dropped = 0.5 * cdist(problem.sources, problem.targets[dropped], "sqeuclidean")
        g_dual[dropped] = np.min(cost_dropped - f_dual[:, None], axis=0)

    return TransportPlan(
        problem=problem,
        source_idx=src,
        target_idx=keep[tgt],
        mass=mass,
        objective=float(objective),
        dual_source=f_dual,
        dual_target=g_dual,
        dropped=dropped,
        pivots=int(pivots),
    )


def solve_assignment(points_a: np.ndarray, points_b: np.ndarray) -> np.ndarray:
    """Minimum-squared-distance bijection between two equal-size sets.

    Returns ``perm`` with ``points_b[perm[k]]`` assigned to
    ``points_a[k]``.  Reduces to :func:`solve_exact` with uniform
    masses; a basic optimal solution of that problem is a permutation.
    """
    pa = np.atleast_2d(np.asarray(points_a, dtype=float))
    pb = np.atleast_2d(np.asarray(points_b, dtype=float))
    if pa.shape != pb.shape:
        raise InvalidInputError(
            f"assignment needs equal counts and dimensions, got {pa.shape} vs {pb.shape}"
        )
    m = pa.shape[0]
    masses = np.full(m, 1.0 / m)
    plan = solve_exact(TransportProblem(pa, masses, pb, masses))
    real = plan.mass > 0.5 / m
    perm = np.full(m, -1, dtype=np.int64)
    perm[plan.source_idx[real]] = plan.target_idx[real]
    if np.any(perm < 0) or np.unique(perm).size != m:
        raise InternalConsistencyError("optimal plan did not induce a bijection")
    return perm


def cycle_sums(xs: np.ndarray, ys: np.ndarray, cycles: np.ndarray) -> np.ndarray:
    """Cycle sums ``sum_l <y_{k_l}, x_{k_{l+1}} - x_{k_l}>`` (wrapping)."""
    x = xs[cycles]
    y = ys[cycles]
    x_next = np.roll(x, -1, axis=1)
    return np.einsum("tld,tld->t", y, x_next - x)


def check_cyclical_monotonicity(
    plan: TransportPlan,
    cycle_len_max: int = 6,
    trials: int = 10_000,
    seed: int = 0,
    slack: float = CYCLE_SLACK_TOL,
) -> bool:
    """Spot-check cyclical monotonicity of the plan's support.

    Samples ``trials`` random index cycles of length between 2 and
    ``cycle_len_max`` from the support pairs (G_i, Y_j) and verifies the
    cycle-sum inequality up to ``slack``.  Optimal plans always pass;
    returns False as soon as one sampled cycle violates the bound.
    """
    if plan.n_entries == 0:
        raise InvalidInputError("plan has empty support")
    if cycle_len_max < 2 or plan.n_entries == 1:
        return True
    xs, ys = plan.support_points()
    rng = np.random.Generator(np.random.Philox(seed))
    lengths = rng.integers(2, cycle_len_max + 1, size=trials)
    for length in np.unique(lengths):
        count = int((lengths == length).sum())
        cycles = rng.integers(0, plan.n_entries, size=(count, int(length)))
        if np.any(cycle_sums(xs, ys, cycles) > slack):
            return False
    return True

"""Empirical conditional center-outward quantile maps.

A fitted map pairs every grid point ``G_i`` with a target ``T_i``
selected from an optimal transport plan (highest-mass column, ties
collapsed to the minimum-norm point of their convex hull).  The pair
set is cyclically monotone, so it embeds into the subdifferential of a
piecewise-affine convex function

    psi(u) = max_i ( <u, T_i> - c_i ),

whose offsets ``c_i`` are fitted here.  Everything downstream --
evaluation at arbitrary points of the unit ball, center-outward ranks,
quantile contours, regions, and medians -- reads off this potential:

* forward (quantile) direction: the subgradient of ``psi`` at ``u``,
  with the minimum-norm selection on ties, or the gradient of the
  Moreau envelope when a smoothing parameter ``eps > 0`` is set;
* backward (rank) direction: the grid point maximizing the conjugate
  expression ``<G_i, y> - psi(G_i)``, whose radius is the rank of y.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _netsimplex
from .errors import (
    InternalConsistencyError,
    InvalidInputError,
    OutOfDomainError,
)
from .grid import SphericalGrid
from .transport import TransportPlan

#: Optimality-gap tolerance of the minimum-norm-point solver.
MIN_NORM_TOL = 1e-10
#: Masses within this of the row maximum count as tied.
MASS_TIE_TOL = 1e-9
#: Relative gap below which an affine piece counts as active.
ACTIVE_PIECE_TOL = 1e-10
#: Relative gap below which conjugate scores count as tied in rank().
RANK_TIE_TOL = 1e-12
#: Slack allowed when verifying the activity inequalities.
ACTIVITY_SLACK = 1e-8


def min_norm_point(points: np.ndarray, tol: float = MIN_NORM_TOL) -> np.ndarray:
    """Minimum-Euclidean-norm element of the convex hull of ``points``.

    Wolfe's algorithm: grow a corral of affinely independent points,
    jump to the affine minimizer while it stays inside the simplex,
    otherwise step to the boundary and drop dead points.  Terminates
    when the optimality gap ``|x|^2 - min_p <x, p>`` falls below
    ``tol`` (scaled by the squared data magnitude).
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.shape[0] == 0:
        raise InvalidInputError("minimum-norm point of an empty set")
    if P.shape[0] == 1:
        return P[0].copy()
    P = np.unique(P, axis=0)
    if P.shape[0] == 1:
        return P[0].copy()

    sq_norms = np.einsum("ij,ij->i", P, P)
    scale = max(1.0, float(sq_norms.max()))
    gap_tol = tol * scale

    idx = [int(np.argmin(sq_norms))]
    lam = np.array([1.0])
    x = P[idx[0]].copy()

    for _ in range(8 * P.shape[0] + 64):
        dots = P @ x
        q = int(np.argmin(dots))
        if float(x @ x) - float(dots[q]) <= gap_tol:
            break
        if q in idx:
            break  # numerically stuck; current x is within working precision
        idx.append(q)
        lam = np.append(lam, 0.0)
        while True:
            A = P[idx]
            k = len(idx)
            kkt = np.zeros((k + 1, k + 1))
            kkt[:k, :k] = A @ A.T
            kkt[:k, k] = 1.0
            kkt[k, :k] = 1.0
            rhs = np.zeros(k + 1)
            rhs[k] = 1.0
            try:
                mu = np.linalg.solve(kkt, rhs)[:k]
            except np.linalg.LinAlgError:
                mu = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:k]
            if np.all(mu > 1e-14):
                lam = mu
                x = mu @ A
                break
            # step from lam toward mu until the first coordinate dies
            shrink = lam - mu
            blocking = shrink > 1e-16
            theta = float(np.min(lam[blocking] / shrink[blocking])) if blocking.any() else 0.0
            theta = min(1.0, max(0.0, theta))
            lam = lam + theta * (mu - lam)
            lam[lam < 1e-14] = 0.0
            keep = lam > 0.0
            if keep.all():
                lam[np.argmin(lam)] = 0.0  # force progress on exact ties
                keep = lam > 0.0
            if not keep.any():
                keep[int(np.argmax(mu))] = True
                lam[keep] = 1.0
            idx = [i for i, flag in zip(idx, keep) if flag]
            lam = lam[keep]
            lam = lam / lam.sum()
            x = lam @ P[idx]
    return x


def extract_targets(plan: TransportPlan, Y: np.ndarray) -> np.ndarray:
    """Select one target per grid point from an optimal plan.

    For each source row, take the columns carrying the highest mass
    (ties within ``MASS_TIE_TOL``) and collapse them to the
    minimum-norm point of their convex hull.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[0] != plan.problem.n:
        raise InvalidInputError(
            f"plan has {plan.problem.n} targets but Y holds {Y.shape[0]} rows"
        )
    N = plan.problem.N
    targets = np.empty((N, Y.shape[1]))
    rows = plan.rows_support()
    for i, pos in enumerate(rows):
        if pos.size == 0:
            raise InternalConsistencyError(f"grid atom {i} carries no mass in the plan")
        masses = plan.mass[pos]
        best = masses.max()
        tied = pos[masses >= best - MASS_TIE_TOL]
        if tied.size == 1:
            targets[i] = Y[plan.target_idx[tied[0]]]
        else:
            targets[i] = min_norm_point(Y[plan.target_idx[tied]])
    return targets


def fit_potentials(grid: SphericalGrid, targets: np.ndarray) -> np.ndarray:
    """Offsets ``c_i`` making each piece of ``max_i(<u,T_i> - c_i)``
    active at its own grid point.

    Built from longest-path potentials over the complete graph with
    edge weight ``<T_k, G_i - G_k>`` from node ``k`` to node ``i``
    (label-correcting sweeps; a positive cycle means the input pairs
    are not cyclically monotone).  Normalized so that ``min_i c_i = 0``.
    """
    T = np.atleast_2d(np.asarray(targets, dtype=float))
    G = grid.points
    N = G.shape[0]
    if T.shape != G.shape:
        raise InvalidInputError(f"expected {G.shape} targets, got {T.shape}")
    M = G @ T.T  # M[i, k] = <G_i, T_k>
    diag = np.ascontiguousarray(np.diag(M))
    improve_tol = 1e-12 * (1.0 + float(np.abs(M).max()))

    phi, _, converged = _netsimplex.bellman_longest(
        np.ascontiguousarray(M.T), diag, improve_tol
    )
    if not converged:
        raise InvalidInputError(
            "positive cycle in the potential construction: the (grid, target) "
            "pairs are not cyclically monotone"
        )

    c = diag - phi
    c -= c.min()
    # own piece must be active at every grid point
    worst = float(np.max((M - c[None, :]).max(axis=1) - (diag - c)))
    if worst > ACTIVITY_SLACK:
        raise InvalidInputError(
            f"activity inequality violated by {worst:.2e}: the (grid, target) "
            "pairs are not cyclically monotone"
        )
    return c


@dataclass(frozen=True)
class ContourSet:
    """Image of the sphere of order ``tau`` under a fitted map.

    For d = 2 the vertices are ordered by ray angle and the polyline is
    closed (first vertex repeated at the end); in higher dimension they
    form a point cloud tagged by ray index.
    """

    tau: float
    vertices: np.ndarray
    ray_index: np.ndarray
    query_x: np.ndarray
    closed: bool

    @property
    def d(self) -> int:
        return self.vertices.shape[1]

    def distinct_vertices(self) -> np.ndarray:
        """Vertices without the closing duplicate."""
        return self.vertices[:-1] if self.closed else self.vertices


@dataclass(frozen=True)
class MedianRegion:
    """Reported conditional median: a point plus the innermost-ring image."""

    point: np.ndarray
    ring: np.ndarray


@dataclass(frozen=True)
class ConditionalQuantileMap:
    """Piecewise-affine convex potential interpolating (grid, target) pairs."""

    grid: SphericalGrid
    targets: np.ndarray
    potentials: np.ndarray
    query_x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    smoothing: float = 0.0

    def __post_init__(self):
        if self.targets.shape[0] != self.grid.N:
            raise InvalidInputError("one target per grid point is required")
        if self.potentials.shape[0] != self.grid.N:
            raise InvalidInputError("one potential per grid point is required")
        if self.smoothing < 0:
            raise InvalidInputError("smoothing parameter must be >= 0")

    @property
    def d(self) -> int:
        return self.grid.d

    @cached_property
    def _grid_values(self) -> np.ndarray:
        """psi evaluated at the grid points (own piece active there)."""
        return np.einsum("ij,ij->i", self.grid.points, self.targets) - self.potentials

    @cached_property
    def _rank_order(self) -> np.ndarray:
        """Grid indices sorted by (radius, index) for deterministic ties."""
        return np.lexsort((np.arange(self.grid.N), self.grid.radii))

    @classmethod
    def from_plan(
        cls,
        grid: SphericalGrid,
        plan: TransportPlan,
        Y: np.ndarray,
        query_x=None,
        smoothing: float = 0.0,
    ) -> "ConditionalQuantileMap":
        targets = extract_targets(plan, Y)
        pots = fit_potentials(grid, targets)
        qx = np.zeros(0) if query_x is None else np.asarray(query_x, dtype=float).ravel()
        return cls(grid=grid, targets=targets, potentials=pots, query_x=qx, smoothing=smoothing)

    # ------------------------------------------------------------------
    # forward direction
    # ------------------------------------------------------------------

    def evaluate(self, u: np.ndarray) -> np.ndarray:
        """Value of the quantile map at a point of the open unit ball.

        With ``smoothing == 0`` this is the minimum-norm point of the
        targets whose affine piece is active at ``u`` (within a 1e-10
        relative gap); at a grid point with a unique active piece it
        returns the fitted target exactly.  With ``smoothing > 0`` it is
        the gradient of the Moreau envelope of the potential, a
        single-valued continuous map.
        """
        u = np.asarray(u, dtype=float).ravel()
        if u.shape[0] != self.d:
            raise InvalidInputError(f"expected a {self.d}-vector, got shape {u.shape}")
        if np.linalg.norm(u) >= 1.0:
            raise OutOfDomainError(f"|u| = {np.linalg.norm(u)!r} is not < 1")
        vals = self.targets @ u - self.potentials
        vmax = vals.max()
        if self.smoothing > 0.0:
            return self._moreau_gradient(u, vals, vmax)
        active = np.flatnonzero(vals >= vmax - ACTIVE_PIECE_TOL * max(1.0, abs(vmax)))
        if active.size == 1:
            return self.targets[active[0]].copy()
        return min_norm_point(self.targets[active])

    def _moreau_gradient(self, u: np.ndarray, vals: np.ndarray, vmax: float) -> np.ndarray:
        """Gradient of the Moreau envelope via a simplex-constrained QP.

        Only pieces that can be active within ``eps * max|T|`` of ``u``
        matter; on those the problem is

            max_{lam in simplex}  <u, T lam> - eps/2 |T lam|^2 - c lam

        solved by away-step Frank-Wolfe, whose optimum yields the
        envelope gradient directly as the blended target ``T lam``.
        """
        eps = self.smoothing
        radius = float(np.linalg.norm(self.targets, axis=1).max())
        cut = vmax - 2.0 * eps * radius * radius - ACTIVE_PIECE_TOL * max(1.0, abs(vmax))
        cand = np.flatnonzero(vals >= cut)
        T = self.targets[cand]
        c = self.potentials[cand]
        k = cand.size
        if k == 1:
            return T[0].copy()
        lam = np.zeros(k)
        lam[int(np.argmax(vals[cand]))] = 1.0
        tbar = lam @ T
        gap_tol = 1e-12 * max(1.0, abs(vmax))
        for _ in range(20 * k + 200):
            grad = T @ (u - eps * tbar) - c
            s = int(np.argmax(grad))
            support = np.flatnonzero(lam > 0)
            a = support[int(np.argmin(grad[support]))]
            fw_gap = grad[s] - float(lam @ grad)
            aw_gap = float(lam @ grad) - grad[a]
            if fw_gap <= gap_tol and aw_gap <= gap_tol:
                break
            if fw_gap >= aw_gap:
                dvec = T[s] - tbar
                dlam_s, dlam_a, step_max = s, None, 1.0
                gd = fw_gap
            else:
                dvec = tbar - T[a]
                dlam_s, dlam_a = None, a
                step_max = lam[a] / (1.0 - lam[a]) if lam[a] < 1.0 else np.inf
                gd = aw_gap
            curv = eps * float(dvec @ dvec)
            step = step_max if curv <= 0 else min(step_max, gd / curv)
            if step <= 0 or not np.isfinite(step):
                break
            if dlam_s is not None:
                lam *= 1.0 - step
                lam[dlam_s] += step
            else:
                lam *= 1.0 + step
                lam[dlam_a] -= step
            lam = np.maximum(lam, 0.0)
            lam /= lam.sum()
            tbar = lam @ T
        return tbar

    # ------------------------------------------------------------------
    # backward direction
    # ------------------------------------------------------------------

    def rank(self, y: np.ndarray) -> float:
        """Center-outward rank of ``y``: the radius of the grid point
        maximizing ``<G_i, y> - psi(G_i)`` (smallest radius, then
        smallest index, on ties).  Lies in [0, N_R/(N_R+1)]."""
        return float(self.rank_many(np.asarray(y, dtype=float).reshape(1, -1))[0])

    def rank_many(self, Y: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`rank` over the rows of ``Y``."""
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if Y.shape[1] != self.d:
            raise InvalidInputError(f"expected {self.d}-vectors, got shape {Y.shape}")
        order = self._rank_order
        scores = Y @ self.grid.points[order].T - self._grid_values[order]
        best = scores.max(axis=1, keepdims=True)
        tol = RANK_TIE_TOL * np.maximum(1.0, np.abs(best))
        first_tie = np.argmax(scores >= best - tol, axis=1)
        return self.grid.radii[order[first_tie]]

    def region_contains(self, y: np.ndarray, tau: float) -> bool:
        """Membership of ``y`` in the quantile region of order ``tau``."""
        _check_tau(tau)
        return bool(self.rank(y) <= tau + 1e-12)

    def region_contains_many(self, Y: np.ndarray, tau: float) -> np.ndarray:
        _check_tau(tau)
        return self.rank_many(Y) <= tau + 1e-12

    # ------------------------------------------------------------------
    # contours and medians
    # ------------------------------------------------------------------

    def contour(self, tau: float) -> ContourSet:
        """Quantile contour of order ``tau``.

        When ``tau`` matches a grid radius the fitted targets on that
        sphere are returned directly; otherwise the map is evaluated at
        ``tau`` times each ray direction.
        """
        _check_tau(tau)
        j = self.grid.grid_radius_index(tau)
        if j is not None:
            ring = self.grid.ring(j)
            verts = self.targets[ring].copy()
            rays = self.grid.ray_index[ring].copy()
        else:
            dirs = self.grid.directions
            verts = np.vstack([self.evaluate(tau * dirs[s]) for s in range(dirs.shape[0])])
            rays = np.arange(dirs.shape[0])
        closed = self.d == 2
        if closed:
            verts = np.vstack([verts, verts[:1]])
            rays = np.append(rays, rays[0])
        return ContourSet(
            tau=float(tau), vertices=verts, ray_index=rays,
            query_x=self.query_x, closed=closed,
        )

    def median_region(self) -> MedianRegion:
        """Innermost-ring image and its minimum-norm point.

        The reported point is the minimum-norm element of the ring
        image's convex hull; the full ring is returned for plotting.
        For d > 3 the central map value can be set-valued in the
        population limit; that regime is untested here.
        """
        ring = self.targets[self.grid.ring(1)]
        return MedianRegion(point=min_norm_point(ring), ring=ring.copy())


def _check_tau(tau: float) -> None:
    if not 0.0 < tau < 1.0:
        raise InvalidInputError(f"quantile order must lie in (0, 1), got {tau!r}")

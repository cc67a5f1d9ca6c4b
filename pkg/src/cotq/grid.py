"""Regular grids discretizing the spherical uniform distribution.

The reference measure lives on the open unit ball of dimension ``d``:
uniform over directions times uniform over the radius.  Its discrete
stand-in puts mass ``1/N`` on each of ``N = N_R * N_S + N_0`` points,
obtained by crossing ``N_S`` unit directions with the ``N_R`` radii
``j / (N_R + 1)`` and optionally adding the origin (``N_0 = 1``).

Direction conventions (documented, not canonical):

* ``d = 1``: ``+1`` then ``-1`` (at most two distinct directions exist);
* ``d = 2``: equiangular rays at angles ``2*pi*s / N_S`` starting at 0;
* ``d = 3``: Fibonacci-sphere points;
* ``d > 3``: seeded i.i.d. uniform directions (normalized Gaussians).

All choices give direction sets whose empirical distribution converges
weakly to the uniform on the sphere as ``N_S`` grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpecError, ResourceLimitError

#: Refuse to materialize grids larger than this.
MAX_GRID_POINTS = 5_000_000

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


@dataclass(frozen=True)
class GridSpec:
    """Parameters of a regular spherical grid.

    Attributes
    ----------
    d : int
        Output dimension, at least 1.
    N_R : int
        Number of radii (hyperspheres), at least 1.
    N_S : int
        Number of rays, at least 1.
    N_0 : int
        Number of origin copies, 0 or 1.
    direction_seed : int
        Seed used when directions are randomly generated (d > 3).
    """

    d: int
    N_R: int
    N_S: int
    N_0: int = 0
    direction_seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise InvalidSpecError(f"output dimension must be >= 1, got {self.d}")
        if self.N_R < 1 or self.N_S < 1:
            raise InvalidSpecError(
                f"N_R and N_S must be >= 1, got N_R={self.N_R}, N_S={self.N_S}"
            )
        if self.N_0 not in (0, 1):
            raise InvalidSpecError(f"N_0 must be 0 or 1, got {self.N_0}")
        if self.d == 1 and self.N_S > 2:
            raise InvalidSpecError(
                "at most 2 distinct directions exist in dimension 1, "
                f"got N_S={self.N_S}"
            )

    @property
    def N(self) -> int:
        """Total number of grid points."""
        return self.N_R * self.N_S + self.N_0

    @classmethod
    def balanced(cls, N: int, d: int, direction_seed: int = 0) -> "GridSpec":
        """Factor ``N`` into ``N_R * N_S + N_0`` with N_R and N_S as close
        as possible (N_0 in {0, 1}); ties and the split favour more rays.

        For d = 1 the ray count is pinned to 2 and ``N_0 = N mod 2``.
        """
        if N < 2:
            raise InvalidSpecError(f"balanced grids need N >= 2, got N={N}")
        if d == 1:
            return cls(d=1, N_R=N // 2, N_S=2, N_0=N % 2, direction_seed=direction_seed)
        best = None
        for n0 in (0, 1):
            M = N - n0
            if M < 1:
                continue
            for r in range(1, int(math.isqrt(M)) + 1):
                if M % r == 0:
                    s = M // r
                    # r <= s: use the larger factor for rays
                    cand = (s - r, n0, r, s)
                    if best is None or cand < best:
                        best = cand
        _, n0, r, s = best
        return cls(d=d, N_R=r, N_S=s, N_0=n0, direction_seed=direction_seed)


def build_directions(d: int, N_S: int, seed: int = 0) -> np.ndarray:
    """Return ``N_S`` distinct unit vectors in dimension ``d``.

    Deterministic given ``(d, N_S, seed)``; the seed only matters for
    d > 3, where directions are drawn as normalized Gaussians.
    """
    if d < 1 or N_S < 1:
        raise InvalidSpecError(f"need d >= 1 and N_S >= 1, got d={d}, N_S={N_S}")
    if d == 1:
        if N_S > 2:
            raise InvalidSpecError(
                f"at most 2 distinct directions exist in dimension 1, got N_S={N_S}"
            )
        return np.array([[1.0], [-1.0]])[:N_S]
    if d == 2:
        angles = 2.0 * np.pi * np.arange(N_S) / N_S
        return np.column_stack([np.cos(angles), np.sin(angles)])
    if d == 3:
        s = np.arange(N_S)
        z = 1.0 - (2.0 * s + 1.0) / N_S
        rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        theta = _GOLDEN_ANGLE * s
        return np.column_stack([rho * np.cos(theta), rho * np.sin(theta), z])
    rng = np.random.Generator(np.random.Philox(seed))
    u = rng.standard_normal((N_S, d))
    norms = np.linalg.norm(u, axis=1, keepdims=True)
    # a zero draw has probability zero; regenerate defensively
    while np.any(norms == 0.0):  # pragma: no cover
        bad = norms[:, 0] == 0.0
        u[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(u, axis=1, keepdims=True)
    return u / norms


@dataclass(frozen=True)
class SphericalGrid:
    """A materialized regular grid with uniform masses.

    ``points`` is laid out radius-major: index ``j * N_S + s`` holds the
    point at radius ``(j+1)/(N_R+1)`` on ray ``s``; the origin, when
    present, comes last.  ``radii`` and ``ray_index`` cache the polar
    decomposition of every point (the origin gets ray index -1).
    """

    spec: GridSpec
    points: np.ndarray
    radii: np.ndarray = field(repr=False)
    ray_index: np.ndarray = field(repr=False)
    directions: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def mass(self) -> float:
        """Mass attached to every atom."""
        return 1.0 / self.N

    @property
    def inner_radius(self) -> float:
        return 1.0 / (self.spec.N_R + 1)

    @property
    def max_radius(self) -> float:
        return self.spec.N_R / (self.spec.N_R + 1)

    def ring(self, j: int) -> np.ndarray:
        """Indices of the points on the ``j``-th sphere (1-based)."""
        if not 1 <= j <= self.spec.N_R:
            raise InvalidSpecError(f"ring index must be in 1..{self.spec.N_R}, got {j}")
        return np.arange((j - 1) * self.spec.N_S, j * self.spec.N_S)

    def grid_radius_index(self, tau: float, tol: float = 1e-12) -> int | None:
        """Return ``j`` when ``tau`` equals the grid radius ``j/(N_R+1)``."""
        j = round(tau * (self.spec.N_R + 1))
        if 1 <= j <= self.spec.N_R and abs(tau - j / (self.spec.N_R + 1)) <= tol:
            return j
        return None


def build_grid(spec: GridSpec) -> SphericalGrid:
    """Materialize the grid described by ``spec``.

    Every non-origin point has norm ``j/(N_R+1)`` for some j in 1..N_R,
    each (radius, ray) pair appears exactly once, and each atom carries
    mass ``1/N``.
    """
    if spec.N > MAX_GRID_POINTS:
        raise ResourceLimitError(
            f"grid would hold {spec.N} points, above the cap of {MAX_GRID_POINTS}"
        )
    dirs = build_directions(spec.d, spec.N_S, spec.direction_seed)
    radii_levels = np.arange(1, spec.N_R + 1) / (spec.N_R + 1)
    points = (radii_levels[:, None, None] * dirs[None, :, :]).reshape(-1, spec.d)
    radii = np.repeat(radii_levels, spec.N_S)
    rays = np.tile(np.arange(spec.N_S), spec.N_R)
    if spec.N_0 == 1:
        points = np.vstack([points, np.zeros((1, spec.d))])
        radii = np.append(radii, 0.0)
        rays = np.append(rays, -1)
    points.setflags(write=False)
    radii.setflags(write=False)
    rays.setflags(write=False)
    dirs.setflags(write=False)
    return SphericalGrid(spec=spec, points=points, radii=radii, ray_index=rays, directions=dirs)

"""Probability weight vectors encoding empirical conditional distributions.

Each scheme turns a query point ``x`` and a covariate sample ``X`` into
non-negative weights summing to one; the weighted empirical measure on
the responses is the plug-in estimate of the conditional law at ``x``.

Supported schemes: Gaussian kernel, compactly supported kernels
(Epanechnikov, uniform), classical k-nearest neighbours, and
center-outward k-nearest neighbours (neighbourhoods measured after
mapping the covariates onto a regular spherical grid by an optimal
assignment).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidSpecError
from .grid import build_directions
from .transport import solve_assignment

logger = logging.getLogger(__name__)

#: |sum(w) - 1| must stay below this.
WEIGHT_SUM_TOL = 1e-12

KERNEL_SCHEMES = ("gaussian", "epanechnikov", "uniform")
NEIGHBOR_SCHEMES = ("knn", "co_knn")


@dataclass(frozen=True)
class WeightVector:
    """Non-negative weights summing to one, tied to the query point."""

    values: np.ndarray
    query: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        query = np.asarray(self.query, dtype=float).ravel()
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "query", query)
        if values.size == 0:
            raise InvalidInputError("weight vector must not be empty")
        if np.any(values < 0.0):
            raise InvalidInputError("weights must be non-negative")
        if abs(values.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidInputError(
                f"weights must sum to 1 within {WEIGHT_SUM_TOL}, got {values.sum()!r}"
            )

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class WeightSpec:
    """Configuration of a weight scheme.

    ``scheme`` is one of ``gaussian``, ``epanechnikov``, ``uniform``
    (kernels, requiring bandwidth ``h > 0``) or ``knn``, ``co_knn``
    (requiring a neighbour count ``k >= 1``).  ``direction_seed`` feeds
    the covariate-grid directions of the co_knn scheme.
    """

    scheme: str
    h: float | None = None
    k: int | None = None
    direction_seed: int = 0

    def __post_init__(self):
        if self.scheme not in KERNEL_SCHEMES + NEIGHBOR_SCHEMES:
            raise InvalidSpecError(f"unknown weight scheme {self.scheme!r}")
        if self.scheme in KERNEL_SCHEMES:
            if self.h is None or not self.h > 0:
                raise InvalidSpecError(
                    f"scheme {self.scheme!r} needs a bandwidth h > 0, got {self.h!r}"
                )
        else:
            if self.k is None or int(self.k) < 1:
                raise InvalidSpecError(
                    f"scheme {self.scheme!r} needs a neighbour count k >= 1, got {self.k!r}"
                )

    def compute(self, x: np.ndarray, X: np.ndarray) -> WeightVector:
        """Evaluate the configured scheme at query ``x``."""
        if self.scheme == "gaussian":
            return gaussian_weights(x, X, self.h)
        if self.scheme in ("epanechnikov", "uniform"):
            return compact_kernel_weights(x, X, self.h, kernel_id=self.scheme)
        if self.scheme == "knn":
            return knn_weights(x, X, int(self.k))
        return co_knn_weights(x, X, int(self.k), direction_seed=self.direction_seed)


def _as_sample(x, X) -> tuple[np.ndarray, np.ndarray]:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    x = np.asarray(x, dtype=float).ravel()
    if X.shape[0] < 1:
        raise InvalidInputError("covariate sample is empty")
    if x.shape[0] != X.shape[1]:
        raise InvalidInputError(
            f"query has dimension {x.shape[0]} but sample has {X.shape[1]} columns"
        )
    return x, X


def _nearest_indicator(dist: np.ndarray) -> np.ndarray:
    w = np.zeros(dist.shape[0])
    w[int(np.argmin(dist))] = 1.0  # argmin takes the smallest index on ties
    return w


def gaussian_weights(x, X, h: float) -> WeightVector:
    """Gaussian kernel weights ``exp(-(|X_i-x|/h)^2)``, normalized.

    If every kernel value underflows to zero in double precision the
    scheme degrades to the 1-nearest-neighbour indicator and a warning
    is logged.
    """
    if not h > 0:
        raise InvalidSpecError(f"bandwidth must be positive, got {h!r}")
    x, X = _as_sample(x, X)
    dist = np.linalg.norm(X - x, axis=1)
    raw = np.exp(-((dist / h) ** 2))
    total = raw.sum()
    if total == 0.0:
        logger.warning(
            "all Gaussian kernel values underflowed (h=%g); falling back to 1-NN", h
        )
        return WeightVector(_nearest_indicator(dist), x)
    return WeightVector(raw / total, x)


def compact_kernel_weights(x, X, h: float, kernel_id: str = "epanechnikov") -> WeightVector:
    """Compactly supported kernel weights (Epanechnikov or uniform).

    Falls back to the 1-nearest-neighbour indicator (with a warning)
    when no sample point lies within the bandwidth.
    """
    if not h > 0:
        raise InvalidSpecError(f"bandwidth must be positive, got {h!r}")
    if kernel_id not in ("epanechnikov", "uniform"):
        raise InvalidSpecError(f"unknown compact kernel {kernel_id!r}")
    x, X = _as_sample(x, X)
    dist = np.linalg.norm(X - x, axis=1)
    t2 = (dist / h) ** 2
    raw = np.maximum(0.0, 1.0 - t2) if kernel_id == "epanechnikov" else (t2 <= 1.0).astype(float)
    total = raw.sum()
    if total == 0.0:
        logger.warning(
            "no sample within bandwidth h=%g of the query; falling back to 1-NN", h
        )
        return WeightVector(_nearest_indicator(dist), x)
    return WeightVector(raw / total, x)


def knn_weights(x, X, k: int) -> WeightVector:
    """Uniform weights 1/k on the k nearest sample points.

    Distance ties are broken in favour of the smaller sample index.
    """
    x, X = _as_sample(x, X)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise InvalidSpecError(f"k must satisfy 1 <= k <= n={n}, got {k}")
    dist = np.linalg.norm(X - x, axis=1)
    order = np.lexsort((np.arange(n), dist))
    w = np.zeros(n)
    w[order[:k]] = 1.0 / k
    return WeightVector(w, x)


def _co_knn_factorization(count: int) -> tuple[int, int, int]:
    """Split ``count`` as n_R * n_S + n_0 with n_0 < min(n_R, n_S)."""
    n_S = max(1, math.isqrt(count - 1) + 1)  # ceil(sqrt(count))
    while True:
        n_R = count // n_S
        n_0 = count - n_R * n_S
        if n_R >= 1 and n_0 < min(n_R, n_S):
            return n_R, n_S, n_0
        n_S -= 1


def _covariate_grid(count: int, m: int, seed: int) -> np.ndarray:
    """Regular grid with ``count`` points in the m-dimensional unit ball,
    allowing several copies of the origin."""
    n_R, n_S, n_0 = _co_knn_factorization(count)
    dirs = build_directions(m, n_S, seed)
    radii = np.arange(1, n_R + 1) / (n_R + 1)
    pts = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, m)
    if n_0 > 0:
        pts = np.vstack([pts, np.zeros((n_0, m))])
    return pts


def co_knn_weights(x, X, k: int, direction_seed: int = 0) -> WeightVector:
    """Uniform weights 1/k on the k nearest center-outward neighbours.

    The query and the sample are jointly assigned to a regular grid of
    n+1 points in the unit ball of the covariate space by minimizing
    the total squared displacement; neighbourhoods are then measured
    between grid images.  Ties in image distance are broken by
    covariate distance, then by sample index.

    For a univariate covariate the center-outward ordering is the
    natural order on the line, so the scheme coincides with plain
    k-nearest neighbours and is computed that way directly.
    """
    x, X = _as_sample(x, X)
    n, m = X.shape
    if not 1 <= k <= n:
        raise InvalidSpecError(f"k must satisfy 1 <= k <= n={n}, got {k}")
    if m == 1:
        return knn_weights(x, X, k)
    grid_pts = _covariate_grid(n + 1, m, direction_seed)
    perm = solve_assignment(np.vstack([x[None, :], X]), grid_pts)
    images = grid_pts[perm]
    image_dist = np.linalg.norm(images[1:] - images[0], axis=1)
    value_dist = np.linalg.norm(X - x, axis=1)
    order = np.lexsort((np.arange(n), value_dist, image_dist))
    w = np.zeros(n)
    w[order[:k]] = 1.0 / k
    return WeightVector(w, x)


def validate_strong_consistency(
    n: int, k: int, c_log: float = 3.0, c_frac: float = 0.25
) -> bool:
    """Heuristic check that ``k`` grows fast enough (and slowly enough)
    with ``n`` for strong consistency of neighbour weights.

    Returns True iff ``k >= c_log * ln(n)`` and ``k <= c_frac * n``.
    Used for advisory warnings only.
    """
    if n < 2:
        raise InvalidInputError(f"need n >= 2, got {n}")
    return k >= c_log * math.log(n) and k <= c_frac * n

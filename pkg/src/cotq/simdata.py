"""Seeded generators for the three synthetic regression models.

All models share a scalar covariate and a bivariate response:

* ``spherical``: parabolic trend with periodic heteroskedasticity and
  spherical Gaussian conditional densities,
      Y = (X, X^2) + s(X) e,  X ~ U[-2, 2],  e ~ N(0, I2),
  with scale s(x) = 1 + 1.5 sin^2(pi x / 2).  Conditional quantile
  contours are exact circles, which makes this the oracle model.
* ``banana``: same trend and scale, but the noise is pushed through
  (1.15 e1, e2/1.15 + 0.5 (e1^2 + 1.21)), bending the conditional
  densities into non-convex banana shapes.
* ``eyelid``: trigonometric trend with quartic drift and skewed,
  heteroskedastic noise on X ~ U[-1, 1]:
      Y1 = sin(2 pi X / 3) + 0.575 e1,
      Y2 = cos(2 pi X / 3) + X^2 + e2^3 / 2.3 + e1 / 4 + 2.65 X^4,
  where e = sqrt(1 + 1.5 sin^2(pi X / 2)) v and v ~ N(0, I2).

Randomness comes from the counter-based Philox 64-bit generator; the
normals are produced by the Box-Muller transform from explicit uniform
draws.  Draw order is fixed (covariates first, then one uniform pair
per observation), so every generator is a pure function of (n, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidSpecError

MODELS = ("spherical", "banana", "eyelid")


@dataclass(frozen=True)
class ModelSpec:
    """A synthetic-model request."""

    model_id: str
    n: int
    seed: int = 0

    def __post_init__(self):
        if self.model_id not in MODELS:
            raise InvalidSpecError(
                f"unknown model {self.model_id!r}; choose one of {MODELS}"
            )
        if self.n < 1:
            raise InvalidSpecError(f"sample size must be >= 1, got {self.n}")


def _generator(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _box_muller(rng: np.random.Generator, count: int) -> tuple[np.ndarray, np.ndarray]:
    """One pair of independent standard normals per observation."""
    u1 = rng.random(count)
    u2 = rng.random(count)
    r = np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 in (0, 1], so the log is finite
    return r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)


def spherical_sigma(x):
    """Noise scale of the spherical and banana models."""
    return 1.0 + 1.5 * np.sin(np.pi * np.asarray(x, dtype=float) / 2.0) ** 2


def gen_spherical(n: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Sample the spherical model; returns (X, Y) with shapes (n,1), (n,2)."""
    if n < 1:
        raise InvalidSpecError(f"sample size must be >= 1, got {n}")
    rng = _generator(seed)
    x = 4.0 * rng.random(n) - 2.0
    e1, e2 = _box_muller(rng, n)
    s = spherical_sigma(x)
    Y = np.column_stack([x + s * e1, x * x + s * e2])
    return x[:, None], Y


def gen_banana(n: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Sample the banana model; returns (X, Y) with shapes (n,1), (n,2)."""
    if n < 1:
        raise InvalidSpecError(f"sample size must be >= 1, got {n}")
    rng = _generator(seed)
    x = 4.0 * rng.random(n) - 2.0
    e1, e2 = _box_muller(rng, n)
    s = spherical_sigma(x)
    Y = np.column_stack(
        [
            x + s * 1.15 * e1,
            x * x + s * (e2 / 1.15 + 0.5 * (e1 * e1 + 1.21)),
        ]
    )
    return x[:, None], Y


def gen_eyelid(n: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Sample the eyelid model; returns (X, Y) with shapes (n,1), (n,2)."""
    if n < 1:
        raise InvalidSpecError(f"sample size must be >= 1, got {n}")
    rng = _generator(seed)
    x = 2.0 * rng.random(n) - 1.0
    v1, v2 = _box_muller(rng, n)
    s = np.sqrt(1.0 + 1.5 * np.sin(np.pi * x / 2.0) ** 2)
    e1 = s * v1
    e2 = s * v2
    Y = np.column_stack(
        [
            np.sin(2.0 * np.pi * x / 3.0) + 0.575 * e1,
            np.cos(2.0 * np.pi * x / 3.0) + x * x + e2**3 / 2.3 + e1 / 4.0 + 2.65 * x**4,
        ]
    )
    return x[:, None], Y


_GENERATORS = {
    "spherical": gen_spherical,
    "banana": gen_banana,
    "eyelid": gen_eyelid,
}


def generate(spec: ModelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Dispatch on the model id."""
    return _GENERATORS[spec.model_id](spec.n, spec.seed)


def conditional_sample(model_id: str, x: float, count: int, seed: int = 0) -> np.ndarray:
    """Fresh draws from the exact conditional law of Y given X = x.

    Uses the model equations with the covariate pinned, so the output
    is exactly distributed as the model's conditional distribution.
    """
    if model_id not in MODELS:
        raise InvalidSpecError(f"unknown model {model_id!r}; choose one of {MODELS}")
    if count < 1:
        raise InvalidInputError(f"draw count must be >= 1, got {count}")
    rng = _generator(seed)
    x = float(x)
    if model_id == "spherical":
        e1, e2 = _box_muller(rng, count)
        s = spherical_sigma(x)
        return np.column_stack([x + s * e1, x * x + s * e2])
    if model_id == "banana":
        e1, e2 = _box_muller(rng, count)
        s = spherical_sigma(x)
        return np.column_stack(
            [
                x + s * 1.15 * e1,
                x * x + s * (e2 / 1.15 + 0.5 * (e1 * e1 + 1.21)),
            ]
        )
    v1, v2 = _box_muller(rng, count)
    s = np.sqrt(1.0 + 1.5 * np.sin(np.pi * x / 2.0) ** 2)
    e1 = s * v1
    e2 = s * v2
    return np.column_stack(
        [
            np.sin(2.0 * np.pi * x / 3.0) + 0.575 * e1,
            np.cos(2.0 * np.pi * x / 3.0) + x * x + e2**3 / 2.3 + e1 / 4.0 + 2.65 * x**4,
        ]
    )


def spherical_contour_radius(tau: float) -> float:
    """Radius of the population contour of order ``tau`` for a standard
    bivariate Gaussian: the chi(2) quantile ``sqrt(-2 ln(1 - tau))``."""
    if not 0.0 < tau < 1.0:
        raise InvalidInputError(f"quantile order must lie in (0, 1), got {tau!r}")
    return float(np.sqrt(-2.0 * np.log1p(-tau)))


def spherical_population_contour(x: float, tau: float, points: int = 512) -> np.ndarray:
    """Discretized population contour of the spherical model at X = x."""
    if points < 3:
        raise InvalidInputError(f"need at least 3 points, got {points}")
    radius = float(spherical_sigma(x)) * spherical_contour_radius(tau)
    ang = 2.0 * np.pi * np.arange(points) / points
    return np.column_stack(
        [x + radius * np.cos(ang), x * x + radius * np.sin(ang)]
    )

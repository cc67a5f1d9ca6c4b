import numpy as np
import numpy.testing as npt
import pytest

from cotq.errors import InvalidInputError, InvalidSpecError
from cotq.simdata import (
    ModelSpec,
    conditional_sample,
    gen_banana,
    gen_eyelid,
    gen_spherical,
    generate,
    spherical_contour_radius,
    spherical_population_contour,
    spherical_sigma,
)


class TestModelSpec:
    def test_validation(self):
        with pytest.raises(InvalidSpecError):
            ModelSpec("unknown", 10)
        with pytest.raises(InvalidSpecError):
            ModelSpec("spherical", 0)

    def test_dispatch_matches_direct_call(self):
        X1, Y1 = generate(ModelSpec("banana", 50, seed=3))
        X2, Y2 = gen_banana(50, seed=3)
        npt.assert_array_equal(X1, X2)
        npt.assert_array_equal(Y1, Y2)


class TestSpherical:
    def test_shapes_and_ranges(self):
        X, Y = gen_spherical(500, seed=0)
        assert X.shape == (500, 1) and Y.shape == (500, 2)
        assert X.min() >= -2.0 and X.max() <= 2.0

    def test_seed_repeatability(self):
        a = gen_spherical(100, seed=42)
        b = gen_spherical(100, seed=42)
        npt.assert_array_equal(a[0], b[0])
        npt.assert_array_equal(a[1], b[1])
        c = gen_spherical(100, seed=43)
        assert not np.array_equal(a[1], c[1])

    def test_first_moment(self):
        # E[Y1] = E[X] + E[sigma(X)] E[e1] = 0
        _, Y = gen_spherical(1_000_000, seed=1)
        assert abs(Y[:, 0].mean()) < 0.01

    def test_conditional_law(self):
        # Y | X=x is N((x, x^2), sigma(x)^2 I)
        for x in (0.0, 1.0, -1.7):
            draws = conditional_sample("spherical", x, 200_000, seed=5)
            s = spherical_sigma(x)
            npt.assert_allclose(draws.mean(axis=0), [x, x * x], atol=0.02 * s)
            npt.assert_allclose(draws.std(axis=0), [s, s], rtol=0.02)
            corr = np.corrcoef(draws.T)[0, 1]
            assert abs(corr) < 0.01

    def test_noise_independent_of_x(self):
        X, Y = gen_spherical(100_000, seed=9)
        e1 = (Y[:, 0] - X[:, 0]) / spherical_sigma(X[:, 0])
        corr = np.corrcoef(X[:, 0], e1)[0, 1]
        assert abs(corr) < 3.0 / np.sqrt(100_000) * 3


class TestBanana:
    def test_scale_at_zero(self):
        assert spherical_sigma(0.0) == 1.0

    def test_second_component_shift(self):
        # E[(Y2 - X^2) / sigma(X)] = 0.5 * (1 + 1.21) = 1.105
        X, Y = gen_banana(1_000_000, seed=2)
        vals = (Y[:, 1] - X[:, 0] ** 2) / spherical_sigma(X[:, 0])
        assert abs(vals.mean() - 1.105) < 0.01

    def test_seed_repeatability(self):
        npt.assert_array_equal(gen_banana(64, 7)[1], gen_banana(64, 7)[1])


class TestEyelid:
    def test_variance_at_zero(self):
        draws = conditional_sample("eyelid", 0.0, 400_000, seed=11)
        # Y1 | X=0 = 0.575 e1 with unit noise scale
        assert abs(draws[:, 0].std() - 0.575) < 0.02
        assert abs(draws[:, 0].mean()) < 0.005

    def test_covariate_marginal(self):
        X, _ = gen_eyelid(1_000_000, seed=3)
        assert abs(np.mean(X[:, 0] <= 0.0) - 0.5) < 0.01
        assert X.min() >= -1.0 and X.max() <= 1.0

    def test_seed_repeatability(self):
        npt.assert_array_equal(gen_eyelid(64, 5)[1], gen_eyelid(64, 5)[1])


class TestConditionalSample:
    def test_invalid_inputs(self):
        with pytest.raises(InvalidSpecError):
            conditional_sample("nope", 0.0, 10)
        with pytest.raises(InvalidInputError):
            conditional_sample("spherical", 0.0, 0)

    def test_matches_generator_law(self):
        # generator rows near x should look like the conditional law
        X, Y = gen_spherical(2_000_000, seed=13)
        near = np.abs(X[:, 0] - 1.0) < 0.005
        cond = conditional_sample("spherical", 1.0, 100_000, seed=14)
        npt.assert_allclose(Y[near].mean(axis=0), cond.mean(axis=0), atol=0.05)
        npt.assert_allclose(Y[near].std(axis=0), cond.std(axis=0), atol=0.05)


class TestAnalyticContours:
    def test_chi2_radii(self):
        assert spherical_contour_radius(0.2) == pytest.approx(0.6680, abs=2e-4)
        assert spherical_contour_radius(0.4) == pytest.approx(1.0108, abs=2e-4)
        with pytest.raises(InvalidInputError):
            spherical_contour_radius(1.0)

    def test_sigma_values(self):
        assert spherical_sigma(1.0) == pytest.approx(2.5)
        assert spherical_sigma(0.0) == 1.0

    def test_population_contour_geometry(self):
        pts = spherical_population_contour(1.0, 0.4, points=256)
        center = np.array([1.0, 1.0])
        radii = np.linalg.norm(pts - center, axis=1)
        npt.assert_allclose(radii, 2.5 * spherical_contour_radius(0.4), rtol=1e-12)

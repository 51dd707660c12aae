import math

import numpy as np
import pytest
from scipy.integrate import quad

from atm_density.atm import AtmConfig, fit_conditional, fit_map
from atm_density.basis import FeatureExpansion
from atm_density.data import Standardization, gen_fig1_mixture, gen_gauss
from atm_density.density import (conditional_log_density, invert, negative_log_likelihood,
                                 pullback_log_density, sample)
from atm_density.multiindex import DownwardClosedSet
from atm_density.rectifier import MapComponent, g_inv
from atm_density.transport import TriangularMap

HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def identity_map(d, m_y=0):
    comps = tuple(MapComponent(FeatureExpansion.zero(m_y + i + 1)) for i in range(d))
    return TriangularMap(comps, Standardization.identity(m_y + d), m_y)


def doubling_map():
    # slope g(c_1) = 2, so S(x) = 2x
    f = FeatureExpansion(DownwardClosedSet(1, [(0,), (1,)]), [0.0, g_inv("softplus", 2.0)], "linear")
    return TriangularMap((MapComponent(f),), Standardization.identity(1))


@pytest.fixture(scope="module")
def fitted_1d():
    return fit_map(gen_fig1_mixture(400, seed=3).values)


@pytest.fixture(scope="module")
def fitted_2d():
    return fit_map(gen_gauss(1000, [[1.0, 0.9], [0.9, 1.0]], seed=4).values)


class TestPullback:
    def test_identity_examples(self):
        assert pullback_log_density(identity_map(1), [0.0]) == pytest.approx(-HALF_LOG_2PI, abs=1e-12)
        assert pullback_log_density(identity_map(1), [0.0]) == pytest.approx(-0.918939, abs=1e-6)
        assert pullback_log_density(identity_map(2), [0.0, 0.0]) == pytest.approx(-1.837877, abs=1e-6)

    def test_doubling_map(self):
        assert pullback_log_density(doubling_map(), [0.0]) == pytest.approx(-0.225791, abs=1e-6)
        x = np.linspace(-3, 3, 7)[:, None]
        expected = math.log(2) - 0.5 * (2 * x[:, 0]) ** 2 - HALF_LOG_2PI
        np.testing.assert_allclose(pullback_log_density(doubling_map(), x), expected, rtol=1e-12)

    def test_standardization_adjustment(self):
        tmap = TriangularMap(identity_map(1).components, Standardization(np.array([1.0]), np.array([2.0])))
        # standardized identity is N(1, 4)
        assert pullback_log_density(tmap, [3.0]) == pytest.approx(-0.5 - math.log(2) - HALF_LOG_2PI)
        assert pullback_log_density(tmap, [3.0], adjust=False) == pytest.approx(-0.5 - HALF_LOG_2PI)

    def test_rejects_non_finite_and_conditional(self):
        with pytest.raises(ValueError):
            pullback_log_density(identity_map(1), [np.nan])
        with pytest.raises(ValueError):
            pullback_log_density(identity_map(1, m_y=1), [0.0, 0.0])

    def test_fitted_map_normalizes(self, fitted_1d):
        total, _ = quad(lambda t: math.exp(pullback_log_density(fitted_1d, [t])), -12, 12,
                        limit=400, points=[-2.0, 2.0])
        assert total == pytest.approx(1.0, abs=2e-3)

    def test_pushforward_is_white(self, fitted_2d):
        x = gen_gauss(1000, [[1.0, 0.9], [0.9, 1.0]], seed=4).values
        z = fitted_2d.forward(x)
        assert np.max(np.abs(np.cov(z.T) - np.eye(2))) < 0.1


class TestConditional:
    def test_no_covariates_reduces_to_joint(self, fitted_2d):
        x = np.array([[0.3, -0.2], [1.0, 0.4]])
        np.testing.assert_array_equal(conditional_log_density(fitted_2d, None, x),
                                      pullback_log_density(fitted_2d, x))

    def test_identity_block(self):
        tmap = identity_map(1, m_y=2)
        for y in ([0.0, 0.0], [3.0, -1.0]):
            assert conditional_log_density(tmap, y, [0.5]) == pytest.approx(-0.125 - HALF_LOG_2PI, abs=1e-14)

    def test_constant_in_y_when_features_ignore_y(self):
        s = DownwardClosedSet(3, [(0, 0, 0), (0, 0, 1), (0, 0, 2)])
        comp = MapComponent(FeatureExpansion(s, [0.1, 0.4, -0.3]))
        tmap = TriangularMap((comp,), Standardization(np.array([1.0, 2.0, 0.0]), np.array([1.0, 3.0, 2.0])), 2)
        rng = np.random.default_rng(0)
        x = rng.standard_normal(4)[:, None]
        base = conditional_log_density(tmap, [0.0, 0.0], x)
        for y in rng.standard_normal((5, 2)) * 4:
            assert np.array_equal(conditional_log_density(tmap, y, x), base)

    def test_fitted_conditional_matches_gaussian(self):
        rng = np.random.default_rng(1)
        y = rng.standard_normal(3000)
        x = 0.8 * y + 0.6 * rng.standard_normal(3000)
        tmap = fit_conditional(np.column_stack([y, x]), 1)
        ys, xs = np.array([-1.0, 0.0, 1.0]), np.array([-0.5, 0.0, 0.9])
        exact = -0.5 * ((xs - 0.8 * ys) / 0.6) ** 2 - math.log(0.6) - HALF_LOG_2PI
        got = conditional_log_density(tmap, ys[:, None], xs[:, None])
        np.testing.assert_allclose(got, exact, atol=0.1)


class TestLikelihood:
    def test_identity_examples(self):
        assert negative_log_likelihood(identity_map(1), np.zeros((1, 1))).mean_nll == pytest.approx(0.918939, abs=1e-6)

    def test_entropy_of_reference(self):
        z = np.random.default_rng(5).standard_normal((100_000, 1))
        assert negative_log_likelihood(identity_map(1), z).mean_nll == pytest.approx(1.418939, abs=0.02)

    def test_adjustment_is_log_std_sum(self, fitted_2d):
        x = gen_gauss(200, [[1.0, 0.9], [0.9, 1.0]], seed=6).values
        on = negative_log_likelihood(fitted_2d, x)
        off = negative_log_likelihood(fitted_2d, x, adjust=False)
        log_std = float(np.sum(np.log(fitted_2d.standardization.std)))
        assert on.mean_nll - off.mean_nll == pytest.approx(log_std, abs=1e-12)
        assert on.mean_nll == pytest.approx(-np.mean(on.log_density) + log_std, abs=1e-12)
        np.testing.assert_allclose(-on.log_density + log_std, -pullback_log_density(fitted_2d, x), rtol=1e-12)

    def test_input_errors(self):
        with pytest.raises(ValueError):
            negative_log_likelihood(identity_map(2), np.zeros((3, 1)))
        with pytest.raises(ValueError):
            negative_log_likelihood(identity_map(1), np.zeros((0, 1)))


class TestInversion:
    def test_examples(self):
        z = np.array([[0.3, -1.2], [2.0, 0.5]])
        np.testing.assert_allclose(invert(identity_map(2), z), z, atol=1e-10)
        assert invert(doubling_map(), [1.0]) == pytest.approx([0.5], abs=1e-10)

    def test_roundtrip_on_fitted_maps(self, fitted_1d, fitted_2d):
        rng = np.random.default_rng(7)
        for tmap in (fitted_1d, fitted_2d):
            x = rng.standard_normal((100, tmap.d)) * 1.5
            assert np.max(np.abs(invert(tmap, tmap.forward(x)) - x)) < 1e-6
            z = rng.standard_normal((100, tmap.d)) * 2
            assert np.max(np.abs(tmap.forward(invert(tmap, z)) - z)) < 1e-8

    def test_conditional_roundtrip(self):
        rng = np.random.default_rng(8)
        y = rng.standard_normal(500)
        x = np.sin(y) + 0.3 * rng.standard_normal(500)
        tmap = fit_conditional(np.column_stack([y, x]), 1)
        ys = rng.standard_normal((20, 1))
        z = rng.standard_normal((20, 1))
        xs = invert(tmap, z, y=ys)
        np.testing.assert_allclose(tmap.forward(np.hstack([ys, xs])), z, atol=1e-8)


class TestSampling:
    def test_identity_samples_are_standard_normal(self):
        count = 4000
        s = sample(identity_map(2), count, seed=1)
        assert s.shape == (count, 2)
        assert np.all(np.abs(s.mean(axis=0)) < 4 / math.sqrt(count))

    def test_empty_and_deterministic(self, fitted_1d):
        assert sample(fitted_1d, 0).shape == (0, 1)
        assert sample(fitted_1d, 50, seed=9).tobytes() == sample(fitted_1d, 50, seed=9).tobytes()
        with pytest.raises(ValueError):
            sample(fitted_1d, -1)

    def test_samples_follow_the_fit(self, fitted_2d):
        s = sample(fitted_2d, 4000, seed=2)
        assert abs(np.corrcoef(s.T)[0, 1] - 0.9) < 0.03

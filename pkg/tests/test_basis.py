import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial.hermite_e import hermegauss, hermeval

from atm_density.basis import (FeatureExpansion, eval_expansion, eval_expansion_partial_k,
                               eval_univariate, eval_univariate_deriv, feature_rows,
                               hermite_polynomials, univariate_table)
from atm_density.multiindex import DownwardClosedSet


def reference_hermite(n, x):
    c = np.zeros(n + 1)
    c[n] = 1.0
    return hermeval(x, c) / math.sqrt(math.factorial(n))


class TestUnivariate:
    def test_degree_zero_is_constant(self):
        assert eval_univariate("hermite_function", 0, 3.7) == 1.0

    def test_degree_one(self):
        assert eval_univariate("hermite_function", 1, 2.0) == pytest.approx(2 * math.exp(-1), rel=1e-14)

    def test_degree_two_at_zero(self):
        assert eval_univariate("hermite_function", 2, 0.0) == pytest.approx(-1 / math.sqrt(2), rel=1e-14)

    def test_derivative_examples(self):
        assert eval_univariate_deriv("hermite_function", 0, 1.3) == 0.0
        assert eval_univariate_deriv("linear", 1, 5.0) == 1.0
        assert eval_univariate_deriv("hermite_function", 1, 0.0) == pytest.approx(1.0, abs=1e-15)

    def test_linear_family_rejects_degree_two(self):
        with pytest.raises(ValueError):
            eval_univariate("linear", 2, 0.5)

    def test_constant_only_family(self):
        assert eval_univariate("constant_only", 0, -2.0) == 1.0
        with pytest.raises(ValueError):
            eval_univariate("constant_only", 1, 0.0)

    def test_recurrence_matches_numpy(self):
        x = np.linspace(-6, 6, 41)
        table = hermite_polynomials(x, 12)
        for n in range(13):
            np.testing.assert_allclose(table[:, n], reference_hermite(n, x), rtol=1e-11, atol=1e-11)

    def test_orthonormality(self):
        nodes, weights = hermegauss(60)
        weights = weights / math.sqrt(2 * math.pi)
        P = hermite_polynomials(nodes, 8)
        gram = (P[:, 1:] * weights[:, None]).T @ P[:, 1:]
        np.testing.assert_allclose(gram, np.eye(8), atol=1e-10)

    @pytest.mark.parametrize("degree", range(9))
    def test_derivative_finite_differences(self, degree):
        x = np.linspace(-5, 5, 101)
        h = 1e-5
        fd = (univariate_table("hermite_function", x + h, 8)[:, degree]
              - univariate_table("hermite_function", x - h, 8)[:, degree]) / (2 * h)
        exact = univariate_table("hermite_function", x, 8, deriv=True)[:, degree]
        scale = np.maximum(np.abs(exact), 1e-3)
        assert np.max(np.abs(fd - exact) / scale) < 1e-6

    def test_decay(self):
        # the Gaussian weight wins once |x| is a few units past the polynomial's growth
        for degree in range(1, 4):
            for x in (-10.0, 10.0):
                assert abs(eval_univariate("hermite_function", degree, x)) < 1e-8
        far = univariate_table("hermite_function", np.array([-12.0, 12.0]), 8)[:, 1:]
        assert np.all(np.abs(far) < 1e-8)

    def test_finite_over_wide_range(self):
        x = np.linspace(-40, 40, 801)
        assert np.all(np.isfinite(univariate_table("hermite_function", x, 30)))
        assert np.all(np.isfinite(univariate_table("hermite_function", x, 30, deriv=True)))


class TestExpansion:
    def test_zero_coefficients(self, rng):
        f = FeatureExpansion(DownwardClosedSet.total_degree(2, 2), np.zeros(6))
        assert eval_expansion(f, rng.standard_normal(2)) == 0.0

    def test_constant_feature(self):
        f = FeatureExpansion(DownwardClosedSet(1, [(0,)]), [2.0])
        assert eval_expansion(f, [0.3]) == 2.0

    def test_product_vanishes(self):
        f = FeatureExpansion(DownwardClosedSet(2, [(0, 0), (1, 0), (0, 1), (1, 1)]), [0, 0, 0, 1.0])
        assert eval_expansion(f, [2.0, 0.0]) == 0.0

    def test_partial_examples(self, rng):
        const = FeatureExpansion(DownwardClosedSet(2, [(0, 0)]), [1.5])
        assert eval_expansion_partial_k(const, rng.standard_normal(2)) == 0.0
        f = FeatureExpansion(DownwardClosedSet(1, [(0,), (1,)]), [0.0, 1.0])
        assert eval_expansion_partial_k(f, [0.0]) == pytest.approx(1.0)

    def test_partial_linear_in_coefficients(self, rng):
        s = DownwardClosedSet.total_degree(3, 3)
        c1, c2 = rng.standard_normal((2, len(s)))
        x = rng.standard_normal((20, 3))
        lhs = eval_expansion_partial_k(FeatureExpansion(s, c1 + c2), x)
        rhs = eval_expansion_partial_k(FeatureExpansion(s, c1), x) + eval_expansion_partial_k(FeatureExpansion(s, c2), x)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)

    def test_feature_rows_constant(self):
        rows, partial = feature_rows(DownwardClosedSet(2, [(0, 0)]), "hermite_function", np.array([[0.4, -1.0]]))
        assert rows.tolist() == [[1.0]]
        assert partial.tolist() == [[0.0]]

    def test_rows_match_expansion(self, rng):
        s = DownwardClosedSet.total_degree(3, 3)
        c = rng.standard_normal(len(s))
        x = rng.standard_normal((100, 3))
        rows, partial = feature_rows(s, "hermite_function", x)
        f = FeatureExpansion(s, c)
        np.testing.assert_array_equal(rows @ c, eval_expansion(f, x))
        np.testing.assert_array_equal(partial @ c, eval_expansion_partial_k(f, x))

    def test_constant_in_last_variable_has_zero_partial(self, rng):
        s = DownwardClosedSet(2, [(0, 0), (1, 0), (2, 0)])
        _, partial = feature_rows(s, "hermite_function", rng.standard_normal((10, 2)))
        assert np.all(partial == 0.0)

    def test_dimension_mismatch(self):
        f = FeatureExpansion(DownwardClosedSet(2, [(0, 0)]), [1.0])
        with pytest.raises(ValueError):
            eval_expansion(f, [1.0, 2.0, 3.0])

    def test_coefficient_count(self):
        with pytest.raises(ValueError):
            FeatureExpansion(DownwardClosedSet(2, [(0, 0)]), [1.0, 2.0])


@given(st.lists(st.integers(0, 4), min_size=1, max_size=3),
       st.lists(st.floats(-4, 4), min_size=3, max_size=3))
def test_tensorization(alpha, point):
    alpha = tuple(alpha)
    k = len(alpha)
    x = np.array(point[:k])
    s = DownwardClosedSet(k, [b for b in np.ndindex(*(a + 1 for a in alpha))])
    rows, _ = feature_rows(s, "hermite_function", x[None, :])
    expected = np.prod([eval_univariate("hermite_function", a, v) for a, v in zip(alpha, x)])
    assert rows[0, s.index(alpha)] == pytest.approx(expected, rel=1e-12, abs=1e-300)


@given(st.floats(-8, 8), st.floats(-3, 3))
def test_expansion_linear(x, a):
    s = DownwardClosedSet(1, [(0,), (1,), (2,)])
    c = np.array([0.5, -1.0, 2.0])
    lhs = eval_expansion(FeatureExpansion(s, a * c), [x])
    assert lhs == pytest.approx(a * eval_expansion(FeatureExpansion(s, c), [x]), rel=1e-12, abs=1e-12)

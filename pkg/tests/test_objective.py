import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from atm_density.basis import FeatureExpansion
from atm_density.multiindex import DownwardClosedSet
from atm_density.objective import (ComponentObjective, ObjectiveConfig, as_batch, raw_objective,
                                   rectified_objective, rectified_objective_grad,
                                   reduced_margin_scores)
from atm_density.rectifier import MapComponent, g_eval


def component(alphas, coeffs, family="hermite_function"):
    k = len(alphas[0])
    return MapComponent(FeatureExpansion(DownwardClosedSet(k, alphas), coeffs, family))


def random_component(rng, k, size):
    s = DownwardClosedSet(k)
    while len(s) < size:
        cands = s.reduced_margin()
        s = s.insert(cands[rng.integers(len(cands))])
    return MapComponent(FeatureExpansion(s, 0.5 * rng.standard_normal(len(s))))


def test_zero_map_single_sample():
    assert rectified_objective(MapComponent(FeatureExpansion.zero(1)), [[0.0]]) == 0.0


def test_zero_map_is_half_mean_square(rng):
    for k in (1, 2, 4):
        x = rng.standard_normal((37, k)) * 3
        val = rectified_objective(MapComponent(FeatureExpansion.zero(k)), x)
        assert val == pytest.approx(np.mean(x[:, -1] ** 2) / 2, rel=1e-14)


def test_linear_map_closed_form(rng):
    a = -0.6
    x = rng.standard_normal((50, 1))
    c = component([(0,), (1,)], [0.0, a], "linear")
    ga = g_eval("softplus", a)
    expected = np.mean(ga ** 2 * x[:, 0] ** 2) / 2 - np.log(ga)
    assert rectified_objective(c, x) == pytest.approx(expected, rel=1e-12)


def test_zero_gradient_example():
    c = component([(0,)], [0.0])
    val, grad = rectified_objective_grad(c, [[0.0]])
    assert val == 0.0 and grad.tolist() == [0.0]


def test_gradient_matches_finite_differences(rng):
    for k in (1, 2, 3):
        c = random_component(rng, k, 6)
        x = rng.standard_normal((40, k))
        obj = ComponentObjective(c.f.alphas(), x, quad_tol=1e-3)
        _, grad = obj.value_and_grad(c.f.coeffs)
        h = 1e-5
        fd = np.empty_like(grad)
        for j in range(grad.size):
            e = np.zeros_like(grad)
            e[j] = h
            fd[j] = (obj.value(c.f.coeffs + e) - obj.value(c.f.coeffs - e)) / (2 * h)
        assert np.max(np.abs(grad - fd)) <= 1e-5 * max(1.0, np.max(np.abs(fd)))


def test_l2_shift():
    c = component([(0,)], [10.0])
    x = [[0.3], [-1.2]]
    _, g0 = rectified_objective_grad(c, x)
    _, g1 = rectified_objective_grad(c, x, ObjectiveConfig(1e-4))
    assert g1[0] - g0[0] == pytest.approx(2e-3, rel=1e-10)


def test_l2_linearity_is_exact(rng):
    c = random_component(rng, 2, 5)
    x = rng.standard_normal((20, 2))
    lam = 0.37
    v0, g0 = rectified_objective_grad(c, x)
    v1, g1 = rectified_objective_grad(c, x, ObjectiveConfig(lam))
    np.testing.assert_allclose(g1 - g0, 2 * lam * c.f.coeffs, rtol=1e-12, atol=1e-15)
    assert v1 - v0 == pytest.approx(lam * c.f.coeffs @ c.f.coeffs, rel=1e-12)


def test_conditional_matches_joint(rng):
    # a conditional component on (y, x) is the joint objective on the stacked columns
    y = rng.standard_normal((30, 2))
    x = rng.standard_normal((30, 1))
    c = random_component(rng, 3, 7)
    joint = np.hstack([y, x])
    assert rectified_objective(c, joint) == rectified_objective(c, np.ascontiguousarray(joint))
    obj = ComponentObjective(c.f.alphas(), joint)
    assert obj.value(c.f.coeffs) == rectified_objective(c, joint)


class TestRawObjective:
    def test_examples(self):
        assert raw_objective([0.0], [1.0]) == 0.0
        assert raw_objective([1.0, -1.0], [1.0, 1.0]) == 0.5

    @pytest.mark.parametrize("partials", [[1.0, 0.0], [-1.0, 1.0], [np.nan, 1.0]])
    def test_domain(self, partials):
        with pytest.raises(ValueError):
            raw_objective([0.0, 0.0], partials)

    @given(arrays(float, 8, elements=st.floats(-50, 50)),
           arrays(float, 8, elements=st.floats(-50, 50)),
           arrays(float, 8, elements=st.floats(1e-6, 1e6)),
           arrays(float, 8, elements=st.floats(1e-6, 1e6)))
    def test_midpoint_convexity(self, sa, sb, pa, pb):
        mid = raw_objective((sa + sb) / 2, (pa + pb) / 2)
        assert mid <= 0.5 * (raw_objective(sa, pa) + raw_objective(sb, pb)) + 1e-12 * (1 + abs(mid))


class TestScores:
    def test_zero_score_for_orthogonal_candidate(self):
        # s is identically zero on the batch {0}; the constant candidate has zero partial
        scores = reduced_margin_scores(MapComponent(FeatureExpansion.zero(1)), [[0.0]], [(0,)])
        assert scores == {(0,): 0.0}

    def test_scores_match_finite_differences(self, rng):
        c = random_component(rng, 2, 4)
        x = rng.standard_normal((25, 2))
        cands = c.f.index_set.reduced_margin()
        scores = reduced_margin_scores(c, x, cands)
        h = 1e-5
        for a in cands:
            big = c.f.index_set.insert(a)
            coeffs = np.array([c.f.coeffs[c.f.index_set.index(b)] if b in c.f.index_set else 0.0
                               for b in big])
            obj = ComponentObjective(np.array(big.members), x)
            e = np.zeros(len(big))
            e[big.index(a)] = h
            fd = abs(obj.value(coeffs + e) - obj.value(coeffs - e)) / (2 * h)
            assert scores[a] == pytest.approx(fd, rel=1e-5, abs=1e-9)

    def test_scores_non_negative_and_deterministic(self, rng):
        c = random_component(rng, 3, 6)
        x = rng.standard_normal((25, 3))
        cands = c.f.index_set.reduced_margin()
        a = reduced_margin_scores(c, x, cands)
        assert a == reduced_margin_scores(c, x, cands)
        assert all(v >= 0 for v in a.values())

    def test_active_candidate_rejected(self):
        c = component([(0,), (1,)], [0.0, 0.0])
        with pytest.raises(ValueError):
            reduced_margin_scores(c, [[0.0]], [(1,)])


class TestBatch:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            as_batch([[0.0], [np.inf]])
        with pytest.raises(ValueError):
            as_batch(np.empty((0, 2)))

    def test_column_count(self):
        with pytest.raises(ValueError):
            rectified_objective(MapComponent(FeatureExpansion.zero(2)), [[0.0]])

    def test_negative_penalty(self):
        with pytest.raises(ValueError):
            ObjectiveConfig(-1.0)

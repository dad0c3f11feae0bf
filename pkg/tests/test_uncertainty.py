import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from possvm.core import Dataset, LinearModel
from possvm.errors import InvalidInputError
from possvm.oracle import finite_diff_gradient
from possvm.uncertainty import (ZERO_LIKELIHOOD, SoftminConfig, TNormSpec, cross_entropy_loss,
                                generalized_log_likelihood, possibilistic_objective, sigmoid,
                                soft_max, soft_min, soft_possibilistic_objective, softmax,
                                tnorm_reduce)

unit = st.floats(0, 1)
FAMILIES = ["product", "min", "lukasiewicz"]


class TestSigmoid:
    @settings(max_examples=300)
    @given(st.floats(-700, 700))
    def test_complement(self, z):
        assert abs(sigmoid(z) + sigmoid(-z) - 1.0) <= 1e-15

    def test_extremes_are_finite(self):
        hi, lo = sigmoid(1000.0), sigmoid(-1000.0)
        assert hi == 1.0
        # exp(-1000) is below the smallest subnormal double, so 0 is the
        # correctly rounded value
        assert 0.0 <= lo <= 1e-300 and not math.isnan(lo)

    def test_vectorised(self):
        np.testing.assert_allclose(sigmoid(np.array([0.0, math.log(3)])), [0.5, 0.75], rtol=1e-15)


class TestSoftmax:
    @settings(max_examples=200)
    @given(st.lists(st.floats(-500, 500), min_size=2, max_size=10), st.floats(-300, 300))
    def test_normalised_and_shift_invariant(self, s, c):
        s = np.array(s)
        p = softmax(s)
        assert abs(p.sum() - 1.0) <= 1e-12
        np.testing.assert_allclose(softmax(s + c), p, atol=1e-12)

    def test_known_value(self):
        e = np.exp([1.0, 2.0, 3.0])
        np.testing.assert_allclose(softmax([1.0, 2.0, 3.0]), e / e.sum(), rtol=1e-15)

    @pytest.mark.parametrize("bad", [[1.0], [1.0, np.inf], [np.nan, 0.0]])
    def test_invalid(self, bad):
        with pytest.raises(InvalidInputError):
            softmax(bad)


class TestTNorms:
    @pytest.mark.parametrize("family", FAMILIES)
    @settings(max_examples=100)
    @given(a=unit, b=unit, c=unit)
    def test_axioms(self, family, a, b, c):
        T = TNormSpec(family)
        assert T(a, b) == T(b, a)
        assert T(a, 1.0) == a
        assert T(T(a, b), c) == pytest.approx(T(a, T(b, c)), abs=1e-15)
        if b <= c:
            assert T(a, b) <= T(a, c) + 1e-15

    @pytest.mark.parametrize("family,expected", [("product", 0.12), ("min", 0.3),
                                                 ("lukasiewicz", 0.0)])
    def test_reduce(self, family, expected):
        assert tnorm_reduce(family, [0.5, 0.8, 0.3]) == pytest.approx(expected, abs=1e-15)

    def test_lukasiewicz_pair(self):
        assert tnorm_reduce("lukasiewicz", [0.9, 0.8]) == pytest.approx(0.7, abs=1e-15)

    def test_reduce_empty_is_error(self):
        with pytest.raises(InvalidInputError):
            tnorm_reduce("min", [])

    def test_out_of_range(self):
        with pytest.raises(InvalidInputError):
            tnorm_reduce("product", [0.5, 1.5])
        with pytest.raises(InvalidInputError):
            TNormSpec("drastic")


class TestLikelihood:
    @settings(max_examples=100)
    @given(st.lists(st.lists(st.floats(1e-12, 1.0), min_size=1, max_size=20), min_size=1, max_size=4))
    def test_product_equals_log_sum(self, groups):
        direct = sum(sum(math.log(v) for v in g) for g in groups)
        assert generalized_log_likelihood(groups, "product") == pytest.approx(direct, abs=1e-12, rel=1e-14)

    def test_mapping_input_and_min(self):
        got = generalized_log_likelihood({1: [0.9, 0.4], -1: [0.5]}, "min")
        assert got == pytest.approx(math.log(0.4) + math.log(0.5), rel=1e-15)

    def test_zero_likelihood(self):
        assert generalized_log_likelihood([[0.3, 0.0]], "product") == ZERO_LIKELIHOOD
        assert generalized_log_likelihood([[0.3, 0.4]], "lukasiewicz") == ZERO_LIKELIHOOD

    def test_product_avoids_underflow(self):
        got = generalized_log_likelihood([[1e-200] * 5], "product")
        assert got == pytest.approx(5 * math.log(1e-200), rel=1e-14)


def _cross_entropy_loop(W, b, X, y, classes):
    total = 0.0
    for x, label in zip(X, y):
        s = [float(np.dot(w, x) + bb) for w, bb in zip(W, b)]
        top = max(s)
        z = sum(math.exp(v - top) for v in s)
        total -= s[list(classes).index(label)] - top - math.log(z)
    return total


class TestCrossEntropy:
    def test_against_loop(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((30, 3))
        y = rng.integers(1, 4, 30)
        W, b = rng.standard_normal((3, 3)), rng.standard_normal(3)
        models = [LinearModel(W[k], b[k]) for k in range(3)]
        got = cross_entropy_loss(models, Dataset(X, y))
        assert got == pytest.approx(_cross_entropy_loop(W, b, X, y, [1, 2, 3]), rel=1e-12)

    def test_zero_models(self):
        X = np.random.default_rng(2).standard_normal((17, 2))
        y = np.arange(17) % 4 + 1
        models = [LinearModel(np.zeros(2), 0.0)] * 4
        assert cross_entropy_loss(models, Dataset(X, y)) == 17 * math.log(4)

    def test_unknown_label(self):
        with pytest.raises(InvalidInputError):
            cross_entropy_loss([LinearModel([0.0], 0.0)] * 2, Dataset([[0.0], [1.0]], [1, 7]))


POS = np.array([[2.0, 0.0], [3.0, 1.0], [2.5, -1.0]])
NEG = np.array([[-1.0, 0.0], [-2.0, 2.0]])
DATA = Dataset.two_class_from(POS, NEG)


class TestPossibilisticObjective:
    def test_known_value(self):
        w, b = np.array([1.0, 0.0]), -0.5
        expected = math.log(sigmoid(2.0 - 0.5)) + math.log(1 - sigmoid(-1.0 - 0.5))
        assert possibilistic_objective(w, b, DATA) == pytest.approx(expected, rel=1e-14)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(0)
        w = np.array([0.6, 0.8])
        shuffled = Dataset.two_class_from(POS[rng.permutation(3)], NEG[::-1])
        assert possibilistic_objective(w, 0.1, shuffled) == possibilistic_objective(w, 0.1, DATA)

    def test_requires_unit_norm(self):
        with pytest.raises(InvalidInputError):
            possibilistic_objective([1.0, 1.0], 0.0, DATA)

    def test_extreme_values_stay_finite(self):
        far = Dataset.two_class_from([[1e4]], [[-1e4]])
        assert possibilistic_objective([1.0], 0.0, far) == pytest.approx(0.0, abs=1e-300)
        assert math.isfinite(possibilistic_objective([-1.0], 0.0, far))


class TestSoftMin:
    @pytest.mark.parametrize("tau", [1.0, 10.0, 100.0, 1000.0])
    @settings(max_examples=100)
    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=100))
    def test_bounds(self, tau, v):
        gap = min(v) - soft_min(v, tau)
        assert 0.0 <= gap <= math.log(len(v)) / tau
        gap = soft_max(v, tau) - max(v)
        assert 0.0 <= gap <= math.log(len(v)) / tau

    def test_single_value(self):
        assert soft_min([3.5], 10.0) == 3.5

    def test_config_validation(self):
        with pytest.raises(InvalidInputError):
            SoftminConfig(0.0)

    @pytest.mark.parametrize("tau", [1.0, 10.0, 100.0])
    def test_gradient_matches_finite_differences(self, tau):
        w0, b0 = np.array([0.6, 0.8]), 0.2

        def f(p):
            # soft objective is defined for any w; rescale to the unit sphere
            # only through the tangent test below, here probe the raw gradient
            return soft_possibilistic_objective(p[:2] / np.linalg.norm(p[:2]), p[2], DATA, tau)[0]

        value, gw, gb = soft_possibilistic_objective(w0, b0, DATA, tau)
        fd = finite_diff_gradient(f, np.r_[w0, b0], h=1e-6)
        tangent = gw - (gw @ w0) * w0  # derivative of w / |w| at a unit w
        np.testing.assert_allclose(fd[:2], tangent, atol=1e-6)
        assert fd[2] == pytest.approx(gb, abs=1e-7)

    @pytest.mark.parametrize("tau", [1.0, 10.0, 100.0, 1000.0])
    def test_inner_terms_within_log_n_over_tau(self, tau):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((40, 3))
        y = np.where(X[:, 0] > 0, 1, -1)
        data = Dataset(X, y)
        w = rng.standard_normal(3)
        w /= np.linalg.norm(w)
        p, q = data.positives @ w, data.negatives @ w
        n = data.size
        assert 0 <= p.min() - soft_min(p, tau) <= math.log(n) / tau
        assert 0 <= soft_max(q, tau) - q.max() <= math.log(n) / tau
        b = 0.3
        hard = possibilistic_objective(w, b, data)
        soft, _, _ = soft_possibilistic_objective(w, b, data, tau)
        assert abs(hard - soft) <= 2 * math.log(n) / tau

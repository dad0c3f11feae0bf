import math

import numpy as np
import pytest

from cases import blobs
from possvm.core import Dataset, LinearModel
from possvm.errors import DivergedError, InvalidInputError
from possvm.oracle import finite_diff_gradient
from possvm.probabilistic import (MulticlassModel, ProbTrainConfig, class_posteriors,
                                  cross_entropy_gradient, predict_class, train_probabilistic)
from possvm.uncertainty import cross_entropy_loss


def _random_problem(rng, m, d, n):
    X = rng.standard_normal((n, d))
    y = rng.integers(1, m + 1, n)
    W = rng.standard_normal((m, d))
    b = rng.standard_normal(m)
    return Dataset(X, y), W, b


def _loss_of(params, m, d, data):
    W, b = params[: m * d].reshape(m, d), params[m * d:]
    return cross_entropy_loss(MulticlassModel.from_arrays(W, b, np.arange(1, m + 1)), data)


class TestGradient:
    @pytest.mark.parametrize("m", [2, 3, 5])
    @pytest.mark.parametrize("d", [1, 2, 10])
    @pytest.mark.parametrize("n", [1, 5, 20])
    def test_matches_finite_differences(self, m, d, n):
        rng = np.random.default_rng(100 * m + 10 * d + n)
        data, W, b = _random_problem(rng, m, d, n)
        model = MulticlassModel.from_arrays(W, b, np.arange(1, m + 1))
        gW, gb = cross_entropy_gradient(model, data)
        fd = finite_diff_gradient(lambda p: _loss_of(p, m, d, data), np.r_[W.ravel(), b])
        assert np.max(np.abs(np.r_[gW.ravel(), gb] - fd)) <= 1e-5

    def test_bias_gradient_sums_to_zero(self):
        data, W, b = _random_problem(np.random.default_rng(0), 4, 3, 30)
        _, gb = cross_entropy_gradient(MulticlassModel.from_arrays(W, b, [1, 2, 3, 4]), data)
        assert abs(gb.sum()) <= 1e-12


class TestModel:
    def test_shift_invariance(self):
        rng = np.random.default_rng(1)
        W, b = rng.standard_normal((3, 2)), rng.standard_normal(3)
        X = rng.standard_normal((50, 2))
        base = MulticlassModel.from_arrays(W, b)
        shifted = MulticlassModel.from_arrays(W + rng.standard_normal(2), b + 4.2)
        np.testing.assert_array_equal(base.predict(X), shifted.predict(X))
        np.testing.assert_allclose(base.posteriors(X), shifted.posteriors(X), atol=1e-12)

    def test_posteriors_sum_to_one(self):
        rng = np.random.default_rng(2)
        model = MulticlassModel.from_arrays(rng.standard_normal((5, 3)), rng.standard_normal(5))
        p = class_posteriors(model, [0.1, -2.0, 3.0])
        assert abs(p.sum() - 1.0) <= 1e-12 and np.all(p >= 0)

    def test_ties_go_to_lowest_index(self):
        model = MulticlassModel.from_arrays(np.zeros((3, 2)), np.zeros(3), [2, 5, 9])
        assert predict_class(model, [1.0, 1.0]) == 2

    def test_invalid_models(self):
        with pytest.raises(InvalidInputError):
            MulticlassModel((LinearModel([1.0], 0.0),))
        with pytest.raises(InvalidInputError):
            MulticlassModel((LinearModel([1.0], 0.0), LinearModel([1.0, 2.0], 0.0)))
        with pytest.raises(InvalidInputError):
            MulticlassModel.from_arrays(np.zeros((2, 1)), np.zeros(2), [3, 1])


class TestTraining:
    def test_zero_model_loss(self):
        for m in (2, 3, 5):
            data = blobs(m, m=m, k=7) if m > 2 else blobs(0, k=7)
            zero = MulticlassModel.from_arrays(np.zeros((m, 2)), np.zeros(m), data.classes)
            assert cross_entropy_loss(zero, data) == data.size * math.log(m)

    def test_monotone_losses(self):
        data = blobs(3, m=3, k=15, sep=3.0)
        losses = []
        train_probabilistic(data, ProbTrainConfig(learning_rate=0.5, max_iterations=300),
                            callback=lambda it, loss: losses.append(loss))
        assert len(losses) > 10
        assert all(b <= a for a, b in zip(losses, losses[1:]))

    @pytest.mark.parametrize("seed", range(3))
    def test_separable_blobs_reach_full_accuracy(self, seed):
        data = blobs(seed, m=3, k=20, sep=6.0)
        model, report = train_probabilistic(data, ProbTrainConfig(max_iterations=5000, seed=seed))
        assert report.extras["training_accuracy"] == 1.0
        assert np.mean(model.predict(data.features) == data.labels) == 1.0

    def test_tiny_separable_instance(self):
        data = Dataset([[0.0], [1.0], [3.0], [4.0]], [1, 1, 2, 2])
        model, report = train_probabilistic(data, ProbTrainConfig(max_iterations=20000))
        np.testing.assert_array_equal(model.predict(data.features), data.labels)
        assert report.final_objective == -report.extras["cross_entropy"]

    def test_deterministic(self):
        data = blobs(5, m=3, k=10, sep=4.0)
        a, _ = train_probabilistic(data, ProbTrainConfig(max_iterations=200, seed=3))
        b, _ = train_probabilistic(data, ProbTrainConfig(max_iterations=200, seed=3))
        np.testing.assert_array_equal(a.weight_matrix, b.weight_matrix)

    def test_single_class_rejected(self):
        with pytest.raises(InvalidInputError):
            train_probabilistic(Dataset([[0.0], [1.0]], [1, 1]))

    def test_nonfinite_loss_raises(self):
        # the initial model ranks the classes the wrong way round (seed 0)
        data = Dataset([[1e300], [-1e300]], [2, 1])
        with pytest.raises(DivergedError):
            train_probabilistic(data, ProbTrainConfig(learning_rate=1e10))

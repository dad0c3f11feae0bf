"""Multi-class linear classifier with softmax posteriors, trained by full-batch
gradient descent on the cross-entropy."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .core import Dataset, LinearModel, TrainingReport, as_vector
from .errors import DivergedError, InvalidInputError
from .uncertainty import _class_index, softmax

MAX_HALVINGS = 30


@dataclass(frozen=True, eq=False)
class MulticlassModel:
    """One hyperplane per class; ``classes[h]`` is the label of ``per_class[h]``."""

    per_class: tuple
    classes: np.ndarray | None = None

    def __post_init__(self):
        models = tuple(self.per_class)
        if len(models) < 2:
            raise InvalidInputError("a multi-class model needs at least two classes")
        if len({m.dimension for m in models}) != 1:
            raise InvalidInputError("all per-class models must share one dimension")
        classes = (np.arange(1, len(models) + 1) if self.classes is None
                   else np.asarray(self.classes, dtype=np.int64).copy())
        if classes.shape != (len(models),) or np.any(np.diff(classes) <= 0):
            raise InvalidInputError("classes must be strictly increasing, one per model")
        classes.setflags(write=False)
        object.__setattr__(self, "per_class", models)
        object.__setattr__(self, "classes", classes)

    @classmethod
    def from_arrays(cls, W, b, classes=None):
        return cls(tuple(LinearModel(w, bb) for w, bb in zip(np.asarray(W), np.asarray(b))),
                   classes)

    @property
    def num_classes(self) -> int:
        return len(self.per_class)

    @property
    def dimension(self) -> int:
        return self.per_class[0].dimension

    @property
    def weight_matrix(self) -> np.ndarray:
        return np.vstack([m.weights for m in self.per_class])

    @property
    def biases(self) -> np.ndarray:
        return np.array([m.bias for m in self.per_class])

    def scores(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dimension:
            raise InvalidInputError(
                f"dimension mismatch: inputs have {X.shape[1]} features, model has {self.dimension}"
            )
        return X @ self.weight_matrix.T + self.biases

    def posteriors(self, X) -> np.ndarray:
        s = self.scores(X)
        return np.exp(s - logsumexp(s, axis=1, keepdims=True))

    def predict(self, X) -> np.ndarray:
        # argmax picks the first maximum: ties go to the lowest class index
        return self.classes[np.argmax(self.scores(X), axis=1)]


@dataclass(frozen=True)
class ProbTrainConfig:
    learning_rate: float = 0.1
    max_iterations: int = 10_000
    tolerance: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0 or not self.tolerance > 0 or self.max_iterations < 1:
            raise InvalidInputError("learning_rate, tolerance and max_iterations must be positive")


def class_posteriors(model: MulticlassModel, x) -> np.ndarray:
    v = as_vector(x, model.dimension)
    return softmax(model.scores(v[None, :])[0])


def predict_class(model: MulticlassModel, x) -> int:
    v = as_vector(x, model.dimension)
    return int(model.predict(v[None, :])[0])


def _loss_and_grad(W, b, X, idx, want_grad=True):
    scores = X @ W.T + b
    lse = logsumexp(scores, axis=1, keepdims=True)
    rows = np.arange(X.shape[0])
    # fsum is correctly rounded: the all-zero model gives exactly n * log(m)
    loss = -math.fsum(scores[rows, idx] - lse[:, 0])
    if not want_grad:
        return loss, None, None
    resid = np.exp(scores - lse)
    resid[rows, idx] -= 1.0
    return loss, resid.T @ X, resid.sum(axis=0)


def cross_entropy_gradient(model: MulticlassModel, data: Dataset):
    """Gradient of the cross-entropy: ``(dW, db)`` with shapes ``(m, d)`` and ``(m,)``.

    ``dW[h] = sum_i (p(h|x_i) - q_hi) x_i`` and ``db[h] = sum_i (p(h|x_i) - q_hi)``.
    """
    if data.dimension != model.dimension:
        raise InvalidInputError("model and dataset dimensions differ")
    idx = _class_index(data.labels, model.classes)
    _, gW, gb = _loss_and_grad(model.weight_matrix, model.biases, data.features, idx)
    return gW, gb


def train_probabilistic(data: Dataset, cfg: ProbTrainConfig = ProbTrainConfig(),
                        callback: Callable[[int, float], None] | None = None):
    """Full-batch gradient descent with per-step halving of the learning rate.

    A step that would increase the loss is retried with half the step (up to
    30 times), so accepted losses never increase.  ``callback(iteration, loss)``
    sees the initial loss (iteration 0) and every accepted one.
    """
    classes = data.classes
    if len(classes) < 2:
        raise InvalidInputError("probabilistic training needs at least two classes")
    X = data.features
    idx = _class_index(data.labels, classes)
    m, d = len(classes), data.dimension
    rng = np.random.default_rng(cfg.seed)
    W = rng.uniform(-0.01, 0.01, size=(m, d))
    b = rng.uniform(-0.01, 0.01, size=m)

    loss, gW, gb = _loss_and_grad(W, b, X, idx)
    if callback is not None:
        callback(0, loss)
    converged = False
    it = 0
    while it < cfg.max_iterations:
        if max(np.abs(gW).max(), np.abs(gb).max()) < cfg.tolerance:
            converged = True
            break
        it += 1
        step = cfg.learning_rate
        for _ in range(MAX_HALVINGS + 1):
            # overflow is caught below as a non-finite loss
            with np.errstate(over="ignore", invalid="ignore"):
                W_new = W - step * gW
                b_new = b - step * gb
                new_loss, _, _ = _loss_and_grad(W_new, b_new, X, idx, want_grad=False)
            if not math.isfinite(new_loss):
                raise DivergedError(f"non-finite loss at iteration {it}", iteration=it)
            if new_loss <= loss:
                break
            step *= 0.5
        else:
            # no descent possible at float resolution
            converged = True
            break
        improvement = loss - new_loss
        W, b = W_new, b_new
        prev, (loss, gW, gb) = loss, _loss_and_grad(W, b, X, idx)
        if callback is not None:
            callback(it, loss)
        if improvement <= cfg.tolerance * max(abs(prev), 1e-300):
            converged = True
            break

    loss = float(loss) + 0.0  # no negative zero in reports
    model = MulticlassModel.from_arrays(W, b, classes)
    accuracy = float(np.mean(model.predict(X) == data.labels))
    report = TrainingReport(
        final_objective=0.0 - loss,
        iterations=it,
        converged=converged,
        extras={"cross_entropy": loss, "training_accuracy": accuracy},
    )
    return model, report

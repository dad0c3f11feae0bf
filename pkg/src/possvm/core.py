"""Domain types, kernels and decision functions shared by every trainer."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InvalidInputError

# Trainers keep a dense Gram matrix up to this many samples and switch to
# on-demand rows above it.
GRAM_CACHE_LIMIT = 10_000

KERNEL_FAMILIES = ("linear", "gaussian", "polynomial")


def _frozen_array(values, dtype=np.float64, ndim=1, name="array"):
    arr = np.array(values, dtype=dtype, copy=True)
    if arr.ndim != ndim:
        raise InvalidInputError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def as_vector(x, dimension=None, name="x"):
    """Coerce ``x`` to a finite float vector, checking its length if given."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise InvalidInputError(f"{name} must be a vector, got shape {v.shape}")
    if dimension is not None and v.shape[0] != dimension:
        raise InvalidInputError(
            f"dimension mismatch: {name} has length {v.shape[0]}, expected {dimension}"
        )
    return v


class Sample(NamedTuple):
    features: np.ndarray
    label: int


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix ``features`` (n x d) with integer ``labels`` (n,).

    ``label_map`` records any relabelling applied at ingestion, mapping the
    original label to the one stored here (e.g. ``{0: -1, 1: 1}``).
    """

    features: np.ndarray
    labels: np.ndarray
    label_map: dict | None = None

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64, copy=True)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise InvalidInputError(f"features must be an n x d matrix, got shape {X.shape}")
        n, d = X.shape
        if n < 1:
            raise InvalidInputError("dataset must contain at least one sample")
        if d < 1:
            raise InvalidInputError("feature vectors must be non-empty")
        if not np.all(np.isfinite(X)):
            raise InvalidInputError("features must be finite")
        y_raw = np.asarray(self.labels)
        if y_raw.shape != (n,):
            raise InvalidInputError(f"expected {n} labels, got shape {y_raw.shape}")
        y = y_raw.astype(np.int64)
        if not np.array_equal(y, y_raw):
            raise InvalidInputError("labels must be integers")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        if self.label_map is not None:
            object.__setattr__(self, "label_map", dict(self.label_map))

    @property
    def size(self) -> int:
        return self.features.shape[0]

    @property
    def dimension(self) -> int:
        return self.features.shape[1]

    @property
    def classes(self) -> np.ndarray:
        return np.unique(self.labels)

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    @property
    def samples(self) -> list[Sample]:
        return [Sample(x, int(c)) for x, c in zip(self.features, self.labels)]

    def __len__(self):
        return self.size

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and self.label_map == other.label_map
        )

    __hash__ = None

    @classmethod
    def from_samples(cls, samples: Sequence[tuple[Sequence[float], int]]) -> "Dataset":
        if not samples:
            raise InvalidInputError("dataset must contain at least one sample")
        X = [list(s[0]) for s in samples]
        if len({len(x) for x in X}) != 1:
            raise InvalidInputError("all samples must share the same dimension")
        return cls(np.array(X, dtype=np.float64), np.array([s[1] for s in samples]))

    @classmethod
    def two_class_from(cls, positives, negatives) -> "Dataset":
        """Build a +1/-1 dataset from two lists of feature vectors."""
        P = np.atleast_2d(np.asarray(positives, dtype=np.float64))
        N = np.atleast_2d(np.asarray(negatives, dtype=np.float64))
        X = np.vstack([P, N])
        y = np.r_[np.ones(len(P), dtype=np.int64), -np.ones(len(N), dtype=np.int64)]
        return cls(X, y).as_two_class()

    def as_two_class(self) -> "Dataset":
        """Validate for two-class use, remapping ``{0, 1}`` labels to ``{-1, +1}``.

        Raises InvalidInputError if either class is missing.
        """
        present = set(int(c) for c in self.classes)
        if present <= {-1, 1}:
            ds = self
        elif present <= {0, 1}:
            mapping = {0: -1, 1: 1}
            y = np.where(self.labels == 0, -1, 1)
            ds = Dataset(self.features, y, label_map=mapping)
        else:
            raise InvalidInputError(
                f"two-class data needs labels in {{-1, +1}} or {{0, 1}}, got {sorted(present)}"
            )
        have = set(int(c) for c in ds.classes)
        if 1 not in have:
            raise InvalidInputError("two-class data has no samples of class +1")
        if -1 not in have:
            raise InvalidInputError("two-class data has no samples of class -1")
        return ds

    @property
    def positives(self) -> np.ndarray:
        return self.features[self.labels == 1]

    @property
    def negatives(self) -> np.ndarray:
        return self.features[self.labels == -1]

    def translated(self, offset) -> "Dataset":
        return Dataset(self.features + as_vector(offset, self.dimension, "offset"),
                       self.labels, self.label_map)


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Hyperplane ``f(x) = weights . x + bias``."""

    weights: np.ndarray
    bias: float

    def __post_init__(self):
        w = _frozen_array(self.weights, name="weights")
        if w.size == 0 or not np.all(np.isfinite(w)):
            raise InvalidInputError("weights must be a finite non-empty vector")
        b = float(self.bias)
        if not math.isfinite(b):
            raise InvalidInputError("bias must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def dimension(self) -> int:
        return self.weights.shape[0]

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dimension:
            raise InvalidInputError(
                f"dimension mismatch: inputs have {X.shape[1]} features, model has {self.dimension}"
            )
        return X @ self.weights + self.bias

    def predict(self, X) -> np.ndarray:
        return np.where(self.decision_function(X) >= 0, 1, -1)


@dataclass(frozen=True)
class KernelSpec:
    family: str = "linear"
    sigma: float | None = None
    degree: int | None = None

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise InvalidInputError(f"unknown kernel family {self.family!r}")
        if self.family == "gaussian":
            if self.sigma is None or not (float(self.sigma) > 0) or not math.isfinite(self.sigma):
                raise InvalidInputError("gaussian kernel needs a finite sigma > 0")
            object.__setattr__(self, "sigma", float(self.sigma))
        elif self.sigma is not None:
            raise InvalidInputError(f"sigma is not a parameter of the {self.family} kernel")
        if self.family == "polynomial":
            if self.degree is None or int(self.degree) != self.degree or self.degree < 1:
                raise InvalidInputError("polynomial kernel needs an integer degree >= 1")
            object.__setattr__(self, "degree", int(self.degree))
        elif self.degree is not None:
            raise InvalidInputError(f"degree is not a parameter of the {self.family} kernel")

    @classmethod
    def linear(cls):
        return cls("linear")

    @classmethod
    def gaussian(cls, sigma):
        return cls("gaussian", sigma=sigma)

    @classmethod
    def polynomial(cls, degree):
        return cls("polynomial", degree=degree)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"family": self.family}
        if self.sigma is not None:
            d["sigma"] = self.sigma
        if self.degree is not None:
            d["degree"] = self.degree
        return d


@dataclass(frozen=True, eq=False)
class KernelModel:
    """Kernel expansion ``f(x) = sum_i coefficients[i] * K(x, support_points[i]) + bias``.

    For SVM models the coefficients are ``alpha_i * y_i``; ``support_labels``
    keeps the ``y_i`` so the multipliers can be recovered.
    """

    coefficients: np.ndarray
    bias: float
    kernel: KernelSpec
    support_points: np.ndarray
    support_labels: np.ndarray

    def __post_init__(self):
        c = _frozen_array(self.coefficients, name="coefficients")
        S = _frozen_array(self.support_points, ndim=2, name="support_points")
        y = _frozen_array(self.support_labels, dtype=np.int64, name="support_labels")
        if S.shape[0] == 0:
            raise InvalidInputError("a kernel model needs at least one support point")
        if c.shape[0] != S.shape[0] or y.shape[0] != S.shape[0]:
            raise InvalidInputError("coefficients, support points and labels must align")
        if not np.all(np.isfinite(c)) or not np.all(np.isfinite(S)):
            raise InvalidInputError("coefficients and support points must be finite")
        b = float(self.bias)
        if not math.isfinite(b):
            raise InvalidInputError("bias must be finite")
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "support_points", S)
        object.__setattr__(self, "support_labels", y)
        object.__setattr__(self, "bias", b)

    @property
    def dimension(self) -> int:
        return self.support_points.shape[1]

    @property
    def alphas(self) -> np.ndarray:
        return self.coefficients * self.support_labels

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dimension:
            raise InvalidInputError(
                f"dimension mismatch: inputs have {X.shape[1]} features, model has {self.dimension}"
            )
        return kernel_matrix(self.kernel, X, self.support_points) @ self.coefficients + self.bias

    def predict(self, X) -> np.ndarray:
        return np.where(self.decision_function(X) >= 0, 1, -1)


@dataclass(frozen=True)
class TrainingReport:
    final_objective: float
    iterations: int
    converged: bool
    margin: float | None = None
    overlap: float | None = None
    bias_bisect_residual: float | None = None
    extras: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "final_objective": self.final_objective,
            "iterations": self.iterations,
            "converged": self.converged,
            "margin": self.margin,
            "overlap": self.overlap,
            "bias_bisect_residual": self.bias_bisect_residual,
        }
        out.update(self.extras)
        return out


def decision_value(model: LinearModel, x) -> float:
    """``w . x + b``; with ``|w| = 1`` its magnitude is the distance from the hyperplane."""
    v = as_vector(x, model.dimension)
    return float(np.dot(model.weights, v) + model.bias)


def kernel_eval(kernel: KernelSpec, xi, xj) -> float:
    a = as_vector(xi, name="xi")
    b = as_vector(xj, a.shape[0], name="xj")
    if kernel.family == "linear":
        return float(np.dot(a, b))
    if kernel.family == "gaussian":
        diff = a - b
        return math.exp(-float(np.dot(diff, diff)) / (2.0 * kernel.sigma**2))
    return float((np.dot(a, b) + 1.0) ** kernel.degree)


def kernel_matrix(kernel: KernelSpec, A, B) -> np.ndarray:
    """Cross-kernel matrix ``K[i, j] = K(A[i], B[j])``."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise InvalidInputError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if kernel.family == "gaussian":
        return np.exp(-cdist(A, B, "sqeuclidean") / (2.0 * kernel.sigma**2))
    inner = A @ B.T
    if kernel.family == "linear":
        return inner
    return (inner + 1.0) ** kernel.degree


def _symmetrize(K):
    return np.triu(K) + np.triu(K, 1).T


def gram_matrix(kernel: KernelSpec, data) -> np.ndarray:
    """Symmetric ``n x n`` matrix of pairwise kernel values."""
    X = data.features if isinstance(data, Dataset) else np.atleast_2d(np.asarray(data, float))
    return _symmetrize(kernel_matrix(kernel, X, X))


def kernel_decision_value(model: KernelModel, x) -> float:
    v = as_vector(x, model.dimension)
    return float(model.decision_function(v[None, :])[0])


class GramOperator:
    """Gram-matrix access that is dense for small ``n`` and row-on-demand above
    ``cache_limit`` (memory stays O(n * block))."""

    def __init__(self, kernel: KernelSpec, X, cache_limit: int = GRAM_CACHE_LIMIT,
                 block: int = 1024):
        self.kernel = kernel
        self.X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        self.n = self.X.shape[0]
        self.block = block
        self.dense = gram_matrix(kernel, self.X) if self.n <= cache_limit else None
        self._diag = None

    def rows(self, idx) -> np.ndarray:
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        if self.dense is not None:
            return self.dense[idx]
        return kernel_matrix(self.kernel, self.X[idx], self.X)

    def diag(self) -> np.ndarray:
        if self._diag is None:
            if self.dense is not None:
                self._diag = np.diag(self.dense).copy()
            else:
                self._diag = np.array([kernel_eval(self.kernel, x, x) for x in self.X])
        return self._diag

    def matvec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if self.dense is not None:
            return self.dense @ v
        out = np.empty(self.n)
        for start in range(0, self.n, self.block):
            stop = min(start + self.block, self.n)
            out[start:stop] = kernel_matrix(self.kernel, self.X[start:stop], self.X) @ v
        return out

    def sub(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        return self.rows(idx)[:, idx]

"""Uncertainty measures and the likelihoods built from them.

The probabilistic likelihood conjoins per-sample posteriors with the product
t-norm (giving the negative cross-entropy); the possibilistic one uses ``min``.
Any t-norm from :data:`TNORM_FAMILIES` can be plugged into
:func:`generalized_log_likelihood`.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import expit, log_expit, logsumexp
from scipy.special import softmax as _softmax

from .core import Dataset, as_vector
from .errors import InvalidInputError

TNORM_FAMILIES = ("product", "min", "lukasiewicz")

# Returned when a class's conjoined measure is exactly zero.  Products are
# summed in the log domain, so underflow never produces this value.
ZERO_LIKELIHOOD = -math.inf

UNIT_NORM_TOL = 1e-9


def sigmoid(z):
    """Logistic function; stable for any finite ``z`` (scalar or array)."""
    out = expit(z)
    return float(out) if np.ndim(out) == 0 else out


def log_sigmoid(z):
    out = log_expit(z)
    return float(out) if np.ndim(out) == 0 else out


def softmax(scores) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or s.shape[0] < 2:
        raise InvalidInputError("softmax needs a vector of at least two scores")
    if not np.all(np.isfinite(s)):
        raise InvalidInputError("scores must be finite")
    return _softmax(s)


@dataclass(frozen=True)
class TNormSpec:
    family: str = "product"

    def __post_init__(self):
        if self.family not in TNORM_FAMILIES:
            raise InvalidInputError(f"unknown t-norm {self.family!r}; choose from {TNORM_FAMILIES}")

    def __call__(self, a: float, b: float) -> float:
        if self.family == "product":
            return a * b
        if self.family == "min":
            return min(a, b)
        # sorted and written as lo - (1 - hi) so T(a, 1) == a and T(a, b) == T(b, a)
        # hold exactly in floating point
        lo, hi = (a, b) if a <= b else (b, a)
        return max(0.0, lo - (1.0 - hi))


def _as_tnorm(tnorm) -> TNormSpec:
    return tnorm if isinstance(tnorm, TNormSpec) else TNormSpec(tnorm)


def _check_measures(values) -> list[float]:
    vals = [float(v) for v in values]
    if not vals:
        raise InvalidInputError("cannot conjoin an empty list of measures")
    for v in vals:
        if not (0.0 <= v <= 1.0):
            raise InvalidInputError(f"measure {v!r} is outside [0, 1]")
    return vals


def tnorm_reduce(tnorm, values: Sequence[float]) -> float:
    """Left fold of the binary t-norm over ``values``.

    An empty list is an error rather than the identity element 1.
    """
    tn = _as_tnorm(tnorm)
    return functools.reduce(tn, _check_measures(values))


def generalized_log_likelihood(per_class_measures, tnorm) -> float:
    """``sum_h log T(measures of class h)`` for the t-norm ``T``.

    ``per_class_measures`` is a mapping ``class -> measures`` or a sequence of
    measure lists.  Returns :data:`ZERO_LIKELIHOOD` if some class conjoins to
    exactly zero.
    """
    tn = _as_tnorm(tnorm)
    groups = (per_class_measures.values() if isinstance(per_class_measures, Mapping)
              else per_class_measures)
    total = 0.0
    for values in groups:
        vals = _check_measures(values)
        if tn.family == "product":
            if min(vals) == 0.0:
                return ZERO_LIKELIHOOD
            total += math.fsum(math.log(v) for v in vals)
            continue
        reduced = tnorm_reduce(tn, vals)
        if reduced == 0.0:
            return ZERO_LIKELIHOOD
        total += math.log(reduced)
    return total


def _class_index(labels, classes):
    classes = np.asarray(classes)
    idx = np.searchsorted(classes, labels)
    idx = np.clip(idx, 0, len(classes) - 1)
    if not np.all(classes[idx] == labels):
        bad = sorted(set(np.asarray(labels)[classes[idx] != labels].tolist()))
        raise InvalidInputError(f"labels {bad} are not among the model classes {classes.tolist()}")
    return idx


def cross_entropy_loss(per_class_models, data: Dataset, classes=None) -> float:
    """Negative probabilistic log-likelihood ``-sum_i log softmax_{y_i}(f(x_i))``.

    ``per_class_models`` is a list of LinearModel (classes ``1..m`` unless
    ``classes`` is given) or a MulticlassModel.
    """
    models = getattr(per_class_models, "per_class", per_class_models)
    if classes is None:
        classes = getattr(per_class_models, "classes", None)
    if classes is None:
        classes = np.arange(1, len(models) + 1)
    W = np.vstack([m.weights for m in models])
    b = np.array([m.bias for m in models])
    if W.shape[1] != data.dimension:
        raise InvalidInputError("model and dataset dimensions differ")
    idx = _class_index(data.labels, classes)
    scores = data.features @ W.T + b
    log_post = scores - logsumexp(scores, axis=1, keepdims=True)
    return -math.fsum(log_post[np.arange(data.size), idx])


def _unit_weights(w, dimension) -> np.ndarray:
    w = as_vector(w, dimension, "w")
    norm = float(np.linalg.norm(w))
    if abs(norm - 1.0) > UNIT_NORM_TOL:
        raise InvalidInputError(f"weight vector must have unit norm, |w| = {norm!r}")
    return w


def _two_class_values(w, data: Dataset):
    data = data.as_two_class()
    w = _unit_weights(w, data.dimension)
    return data, data.positives @ w, data.negatives @ w


def possibilistic_objective(w, b: float, data: Dataset) -> float:
    """``log g(min_+ f) + log(1 - g(max_- f))`` for a unit-norm ``w``."""
    _, p, q = _two_class_values(w, data)
    return float(log_sigmoid(p.min() + b) + log_sigmoid(-(q.max() + b)))


@dataclass(frozen=True)
class SoftminConfig:
    temperature: float = 1.0

    def __post_init__(self):
        if not (self.temperature > 0) or not math.isfinite(self.temperature):
            raise InvalidInputError("soft-min temperature must be finite and positive")


def soft_min(values, tau: float) -> float:
    """``-(1/tau) log sum exp(-tau v)``.

    The result satisfies ``0 <= min(v) - soft_min(v) <= log(n) / tau`` as
    evaluated in floating point: it is computed relative to ``min(v)`` and
    nudged by an ulp where the final rounding would cross a bound.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise InvalidInputError("soft-min of an empty list")
    lo = float(v.min())
    # every term is <= 1 and the minimum contributes exactly 1, so 1 <= s <= n
    s = float(np.sum(np.exp(-tau * (v - lo))))
    out = lo - math.log(s) / tau
    if out > lo:
        out = lo
    limit = math.log(v.size) / tau
    while lo - out > limit:
        out = math.nextafter(out, math.inf)
    return out


def soft_max(values, tau: float) -> float:
    return -soft_min(-np.asarray(values, dtype=np.float64), tau)


def soft_possibilistic_terms(pos_values, neg_values, b: float, tau: float):
    """Soft possibilistic objective on precomputed projections.

    Returns ``(value, d_pos, d_neg, d_b)`` where ``d_pos[i]`` is the derivative
    with respect to the i-th positive projection (likewise ``d_neg``).
    """
    p = np.asarray(pos_values, dtype=np.float64)
    q = np.asarray(neg_values, dtype=np.float64)
    lp = -tau * p
    lq = tau * q
    lse_p = logsumexp(lp)
    lse_q = logsumexp(lq)
    s_pos = -lse_p / tau
    s_neg = lse_q / tau
    value = log_sigmoid(s_pos + b) + log_sigmoid(-(s_neg + b))
    d_spos = float(expit(-(s_pos + b)))
    d_sneg = -float(expit(s_neg + b))
    d_pos = d_spos * np.exp(lp - lse_p)
    d_neg = d_sneg * np.exp(lq - lse_q)
    return float(value), d_pos, d_neg, d_spos + d_sneg


def soft_possibilistic_objective(w, b: float, data: Dataset, cfg):
    """Smoothed possibilistic objective and its exact gradient.

    ``cfg`` is a SoftminConfig or a bare temperature.  Returns
    ``(value, grad_w, grad_b)``.
    """
    tau = cfg.temperature if isinstance(cfg, SoftminConfig) else SoftminConfig(cfg).temperature
    data, p, q = _two_class_values(w, data)
    value, d_pos, d_neg, d_b = soft_possibilistic_terms(p, q, b, tau)
    grad_w = data.positives.T @ d_pos + data.negatives.T @ d_neg
    return value, grad_w, d_b

"""Brute-force reference solutions, independent of the trainers they check."""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

from .core import Dataset
from .errors import DivergedError, InvalidInputError


class MarginSolution(NamedTuple):
    w: np.ndarray
    b: float
    margin: float


def _angle_margins(P, N, theta):
    W = np.stack([np.cos(theta), np.sin(theta)])
    return (P @ W).min(axis=0) - (N @ W).max(axis=0)


def _solution(P, N, w):
    p, q = P @ w, N @ w
    return MarginSolution(w, -0.5 * (float(p.min()) + float(q.max())),
                          float(p.min()) - float(q.max()))


def brute_force_max_margin_2d(data: Dataset, angle_steps: int = 3600,
                              refinements: int = 3, zoom: int = 20,
                              seeds: int = 3) -> MarginSolution:
    """Exhaustive search over unit directions ``(cos t, sin t)``.

    A coarse grid of ``angle_steps`` angles is followed by ``refinements``
    levels, each searching +-1 step around the ``seeds`` best angles at a
    ``zoom`` times finer spacing.
    """
    data = data.as_two_class()
    if data.dimension != 2:
        raise InvalidInputError(f"2-D oracle needs d = 2, got d = {data.dimension}")
    if angle_steps < 360:
        raise InvalidInputError("angle_steps must be at least 360")
    P, N = data.positives, data.negatives
    step = 2 * math.pi / angle_steps
    theta = np.arange(angle_steps) * step
    m = _angle_margins(P, N, theta)
    best = theta[np.argsort(-m, kind="stable")[:seeds]]
    for _ in range(refinements):
        fine = step / zoom
        offsets = np.arange(-zoom, zoom + 1) * fine
        theta = (best[:, None] + offsets[None, :]).ravel()
        m = _angle_margins(P, N, theta)
        best = theta[np.argsort(-m, kind="stable")[:seeds]]
        step = fine
    t = best[0]
    return _solution(P, N, np.array([math.cos(t), math.sin(t)]))


def enumerate_1d(data: Dataset) -> MarginSolution:
    """Exact optimum in one dimension, where the unit sphere is ``{+1, -1}``.

    Ties favour ``w = +1``.
    """
    data = data.as_two_class()
    if data.dimension != 1:
        raise InvalidInputError(f"1-D oracle needs d = 1, got d = {data.dimension}")
    P, N = data.positives, data.negatives
    plus = _solution(P, N, np.array([1.0]))
    minus = _solution(P, N, np.array([-1.0]))
    return plus if plus.margin >= minus.margin else minus


def finite_diff_gradient(objective: Callable[[np.ndarray], float], params,
                         h: float = 1e-5) -> np.ndarray:
    """Central differences ``(f(p + h e_i) - f(p - h e_i)) / 2h`` per coordinate."""
    p = np.array(params, dtype=np.float64)
    grad = np.empty_like(p)
    flat, gflat = p.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = float(objective(p))
        flat[i] = orig - h
        fm = float(objective(p))
        flat[i] = orig
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise DivergedError(f"objective is not finite around coordinate {i}", iteration=i)
        gflat[i] = (fp - fm) / (2 * h)
    return grad

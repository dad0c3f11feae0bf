"""Support vector machine trained by sequential minimal optimisation on the dual

    maximise  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
    s.t.      0 <= a_i <= C,  sum_i a_i y_i = 0

The pair-update loop runs in the compiled ``_smo`` extension when it is
available and falls back to :mod:`possvm._smo_py` otherwise.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import _smo_py
from .core import Dataset, GramOperator, KernelModel, KernelSpec, TrainingReport
from .errors import DegenerateError, InvalidInputError, UnsupportedOperationError

try:
    from . import _smo as _smo_c
except ImportError:  # extension not built
    _smo_c = None

if os.environ.get("POSSVM_PURE_PYTHON"):
    _smo_c = None

BACKEND = "cython" if _smo_c is not None else "python"

HARD = "hard"
# "hard" margin is a box bound that separable data never reaches
HARD_PENALTY = 1e8
SUPPORT_THRESHOLD = 1e-10


@dataclass(frozen=True)
class SvmConfig:
    """``penalty`` is C or ``"hard"``.

    The solver iterates until the maximal KKT pair gap falls below
    ``precision``; the run counts as converged when the final
    :func:`kkt_violation` is within ``kkt_tolerance``.  ``max_passes`` bounds
    the work at ``max_passes * n`` pair updates.
    """

    penalty: float | str = HARD
    kkt_tolerance: float = 1e-3
    max_passes: int = 1000
    seed: int = 0
    precision: float = 1e-10

    def __post_init__(self):
        if self.penalty != HARD:
            try:
                c = float(self.penalty)
            except (TypeError, ValueError):
                raise InvalidInputError(f"penalty must be a positive number or {HARD!r}") from None
            if not c > 0 or not math.isfinite(c):
                raise InvalidInputError("penalty C must be positive and finite")
            object.__setattr__(self, "penalty", c)
        if not self.kkt_tolerance > 0 or not self.precision > 0:
            raise InvalidInputError("tolerances must be positive")
        if self.max_passes < 1:
            raise InvalidInputError("max_passes must be >= 1")

    @property
    def is_hard(self) -> bool:
        return self.penalty == HARD

    @property
    def C(self) -> float:
        return HARD_PENALTY if self.is_hard else float(self.penalty)


def _solve(gram: GramOperator, y, cfg: SvmConfig, backend, trace):
    n = len(y)
    max_iter = cfg.max_passes * n
    rebuild = 100 * n
    if backend == "cython" and gram.dense is not None:
        state = _smo_py.XorShift64(cfg.seed).state
        return _smo_c.solve(gram.dense, y, cfg.C, cfg.precision, max_iter, state, rebuild, trace)
    if gram.dense is not None:
        return _smo_py.solve(gram.dense, y, cfg.C, cfg.precision, max_iter, cfg.seed, rebuild, trace)
    return _smo_py.solve(None, y, cfg.C, cfg.precision, max_iter, cfg.seed, rebuild, trace,
                         row=lambda i: gram.rows(i)[0], diag=gram.diag())


def train_svm(data: Dataset, kernel: KernelSpec = KernelSpec("linear"),
              cfg: SvmConfig = SvmConfig(), backend: str | None = None,
              trace: list | None = None):
    """Train an SVM; the returned model stores ``alpha_i * y_i`` for every
    training sample.

    If ``trace`` is a list, the dual objective after every pair update is
    appended to it.  A run that misses the KKT tolerance still returns its
    model, with ``report.converged`` false.
    """
    data = data.as_two_class()
    backend = backend or BACKEND
    if backend not in ("cython", "python"):
        raise InvalidInputError(f"unknown backend {backend!r}")
    if backend == "cython" and _smo_c is None:
        raise InvalidInputError("the compiled SMO backend is not available")
    gram = GramOperator(kernel, data.features)
    y = data.labels.astype(np.float64)
    alpha, F, updates, gap, dual = _solve(gram, y, cfg, backend, trace is not None)
    if trace is not None:
        trace.extend(dual)
    coef = alpha * y
    b = _bias_from_projections(alpha, y, F + y, cfg)
    model = KernelModel(coef, b, kernel, data.features, data.labels)

    g = F + y
    wnorm = math.sqrt(max(float(coef @ g), 0.0))
    top, bottom = float(g[y > 0].min()), float(g[y < 0].max())
    geo = (top - bottom) / wnorm if wnorm > 0 else float("nan")
    violation = kkt_violation(model, data, cfg)
    report = TrainingReport(
        final_objective=float(alpha.sum() - 0.5 * coef @ g),
        iterations=int(updates),
        converged=bool(violation <= cfg.kkt_tolerance),
        margin=geo if geo >= 0 else None,
        overlap=-geo if geo < 0 else None,
        bias_bisect_residual=abs((top + b) + (bottom + b)),
        extras={
            "kkt_violation": violation,
            "pair_gap": gap,
            "weight_norm": wnorm,
            "support_vectors": int(np.sum(alpha > SUPPORT_THRESHOLD)),
            "backend": backend,
        },
    )
    return model, report


def _bias_from_projections(alpha, y, g, cfg: SvmConfig) -> float:
    sv = alpha > SUPPORT_THRESHOLD
    if not sv.any():
        raise DegenerateError("no support vectors: every multiplier is zero")
    if cfg.is_hard:
        pos, neg = sv & (y > 0), sv & (y < 0)
        if not pos.any() or not neg.any():
            raise DegenerateError("hard-margin bias needs a support vector in each class")
        return -0.5 * (float(g[pos].min()) + float(g[neg].max()))
    C = cfg.C
    at_bound = alpha >= C - SUPPORT_THRESHOLD * max(1.0, C)
    free = sv & ~at_bound
    if free.any():
        return float(np.mean(y[free] - g[free]))
    # only bounded multipliers: centre of the feasible bias interval
    zero = ~sv
    lo = np.r_[1 - g[(y > 0) & zero], -1 - g[(y < 0) & at_bound]]
    hi = np.r_[1 - g[(y > 0) & at_bound], -1 - g[(y < 0) & zero]]
    lo_v = lo.max() if lo.size else None
    hi_v = hi.min() if hi.size else None
    if lo_v is None:
        return float(hi_v)
    if hi_v is None:
        return float(lo_v)
    return float(0.5 * (lo_v + hi_v))


def svm_bias(alphas, data: Dataset, kernel: KernelSpec, cfg: SvmConfig = SvmConfig()) -> float:
    """Bias for given multipliers.

    Hard margin centres the hyperplane between the support vectors of the two
    classes; soft margin averages ``y_i - sum_j c_j K_ij`` over free support
    vectors (``0 < alpha_i < C``).
    """
    data = data.as_two_class()
    alpha = np.asarray(alphas, dtype=np.float64)
    if alpha.shape != (data.size,):
        raise InvalidInputError("need one multiplier per sample")
    y = data.labels.astype(np.float64)
    g = GramOperator(kernel, data.features).matvec(alpha * y)
    return _bias_from_projections(alpha, y, g, cfg)


def weight_from_alphas(model: KernelModel, data: Dataset | None = None) -> np.ndarray:
    """Explicit ``w = sum_i alpha_i y_i x_i`` of a linear-kernel model."""
    if model.kernel.family != "linear":
        raise UnsupportedOperationError(
            f"explicit weights exist only for the linear kernel, not {model.kernel.family!r}"
        )
    X = model.support_points if data is None else data.features
    if X.shape[0] != model.coefficients.shape[0]:
        raise InvalidInputError("dataset does not match the model's training samples")
    return X.T @ model.coefficients


def kkt_violation(model: KernelModel, data: Dataset, cfg: SvmConfig = SvmConfig()) -> float:
    """Largest excess beyond ``cfg.kkt_tolerance`` of any KKT condition; 0 when
    all hold."""
    data = data.as_two_class()
    alpha = model.coefficients * model.support_labels
    if alpha.shape[0] != data.size:
        raise InvalidInputError("model multipliers do not align with the dataset")
    y = data.labels.astype(np.float64)
    yE = y * model.decision_function(data.features) - 1.0
    tol = cfg.kkt_tolerance
    C = cfg.C
    zero = alpha <= SUPPORT_THRESHOLD
    bound = alpha >= C - SUPPORT_THRESHOLD * max(1.0, C)
    free = ~zero & ~bound
    excess = np.zeros_like(yE)
    excess[zero] = np.maximum(-yE[zero] - tol, 0.0)
    excess[free] = np.maximum(np.abs(yE[free]) - tol, 0.0)
    excess[bound] = np.maximum(yE[bound] - tol, 0.0)
    return float(excess.max())


def dual_objective(model: KernelModel) -> float:
    c = model.coefficients
    alpha = c * model.support_labels
    G = GramOperator(model.kernel, model.support_points)
    return float(alpha.sum() - 0.5 * c @ G.matvec(c))

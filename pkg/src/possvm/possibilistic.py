"""Two-class possibilistic classifier: direct maximisation of the min-conjoined
likelihood under a unit-norm hyperplane, in input space or kernel feature space.

With the bias at its optimum (halfway between the two class boundaries) the
objective is ``2 log g(margin / 2)``, so maximising it maximises the interclass
margin, or minimises the overlap when the classes cannot be separated.

Optimisation runs in three layers per restart:

1. projected ascent on a soft-min surrogate, annealing the temperature;
2. an active-set refinement that solves the stationarity conditions of the
   hard objective on the samples nearest each class boundary;
3. selection of the best restart by the hard objective.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import (Dataset, GramOperator, KernelModel, KernelSpec, LinearModel,
                   TrainingReport)
from .errors import DegenerateError, DivergedError, InvalidInputError
from .uncertainty import (UNIT_NORM_TOL, _unit_weights, log_sigmoid,
                          soft_possibilistic_terms)

DEFAULT_SCHEDULE = (1.0, 10.0, 100.0, 1000.0)

# refinement enumerates all small support subsets while the count stays below this
_MAX_SUBSETS = 3000
_PREFIX_CAP = 30


@dataclass(frozen=True)
class PossTrainConfig:
    """Settings for the annealed soft-min ascent.

    Temperatures are multiplied by ``1 / radius`` of the data so the schedule
    is independent of the data's scale.  ``max_iterations`` is the ascent-step
    budget of one restart, split evenly over the schedule.
    """

    learning_rate: float = 0.1
    max_iterations: int = 4000
    tolerance: float = 1e-10
    seed: int = 0
    temperature_schedule: tuple = DEFAULT_SCHEDULE
    restarts: int = 5
    refine: bool = True

    def __post_init__(self):
        sched = tuple(float(t) for t in self.temperature_schedule)
        if not sched or any(t <= 0 for t in sched) or any(
                b <= a for a, b in zip(sched, sched[1:])):
            raise InvalidInputError("temperature_schedule must be positive and strictly increasing")
        object.__setattr__(self, "temperature_schedule", sched)
        if self.restarts < 1:
            raise InvalidInputError("restarts must be >= 1")
        if not self.learning_rate > 0 or not self.tolerance > 0:
            raise InvalidInputError("learning_rate and tolerance must be positive")
        if self.max_iterations < len(sched):
            raise InvalidInputError("max_iterations must allow at least one step per stage")


def _split(w, data: Dataset):
    data = data.as_two_class()
    w = _unit_weights(w, data.dimension)
    return data.positives @ w, data.negatives @ w


def optimal_bias(w, data: Dataset) -> float:
    """Bias placing the hyperplane halfway between the two class boundaries."""
    p, q = _split(w, data)
    return -0.5 * (float(p.min()) + float(q.max()))


def margin(w, data: Dataset) -> float:
    """``min_+ w.x - max_- w.x``; negative values are the interclass overlap."""
    p, q = _split(w, data)
    return float(p.min()) - float(q.max())


def kernel_margin(model: KernelModel, data: Dataset) -> float:
    """Feature-space margin of a kernel expansion, normalised by its norm."""
    data = data.as_two_class()
    G = GramOperator(model.kernel, model.support_points)
    c = model.coefficients
    norm = math.sqrt(max(float(c @ G.matvec(c)), 0.0))
    if norm <= 0:
        raise DegenerateError("kernel model has zero feature-space norm")
    v = model.decision_function(data.features) - model.bias
    return (float(v[data.labels == 1].min()) - float(v[data.labels == -1].max())) / norm


# -- parameter spaces -------------------------------------------------------

class _InputSpace:
    """Hyperplane normal ``w`` in R^d."""

    def __init__(self, X):
        self.X = X
        self.n, self.d = X.shape

    def project(self, w):
        return self.X @ w

    def direction(self, u):
        return self.X.T @ u

    def inner(self, a, b, a_proj=None):
        return float(a @ b)

    def norm(self, w):
        return float(np.linalg.norm(w))

    def gram_sub(self, S):
        XS = self.X[S]
        return XS @ XS.T

    def from_subset(self, S, beta):
        return self.X[S].T @ beta

    def random(self, rng):
        return rng.standard_normal(self.d)

    def max_support(self):
        return self.d + 1

    def radius(self):
        c = self.X - self.X.mean(axis=0)
        return float(np.sqrt((c * c).sum(axis=1).max()))


class _FeatureSpace:
    """Expansion coefficients ``beta`` with ``w = sum_i beta_i phi(x_i)``; the
    inner product is ``a^T G b``."""

    def __init__(self, gram: GramOperator):
        self.G = gram
        self.n = gram.n

    def project(self, beta):
        return self.G.matvec(beta)

    def direction(self, u):
        # natural gradient: the feature-space gradient sum_i u_i phi(x_i)
        return u

    def inner(self, a, b, a_proj=None):
        return float(b @ (a_proj if a_proj is not None else self.G.matvec(a)))

    def norm(self, beta):
        return math.sqrt(max(float(beta @ self.G.matvec(beta)), 0.0))

    def gram_sub(self, S):
        return self.G.sub(S)

    def from_subset(self, S, beta):
        out = np.zeros(self.n)
        out[S] = beta
        return out

    def random(self, rng):
        return rng.standard_normal(self.n)

    def max_support(self):
        return self.n

    def radius(self):
        diag = self.G.diag()
        col_mean = self.G.matvec(np.full(self.n, 1.0 / self.n))
        total = float(col_mean.mean())
        return math.sqrt(max(float((diag - 2 * col_mean + total).max()), 0.0))


# -- one restart ------------------------------------------------------------

class _Problem:
    def __init__(self, space, labels, cfg: PossTrainConfig):
        self.space = space
        self.pos = np.flatnonzero(labels == 1)
        self.neg = np.flatnonzero(labels == -1)
        self.cfg = cfg
        r = space.radius()
        self.scale = r if r > 0 else 1.0

    def hard(self, v):
        p, q = v[self.pos], v[self.neg]
        b = -0.5 * (float(p.min()) + float(q.max()))
        m = float(p.min()) - float(q.max())
        return m, b

    def soft(self, theta, tau):
        v = self.space.project(theta)
        _, b = self.hard(v)
        val, d_pos, d_neg, _ = soft_possibilistic_terms(v[self.pos], v[self.neg], b, tau)
        if not math.isfinite(val):
            raise DivergedError("non-finite soft objective")
        u = np.zeros(v.shape[0])
        u[self.pos] = d_pos
        u[self.neg] = d_neg
        return val, self.space.direction(u), v

    def normalize(self, theta):
        nrm = self.space.norm(theta)
        if not nrm > 1e-12 or not math.isfinite(nrm):
            raise DegenerateError("search direction has (numerically) zero norm")
        return theta / nrm

    def anneal(self, theta):
        """Projected soft-min ascent through the temperature schedule.

        Returns ``(theta, steps, converged)``; ``converged`` reports whether the
        final stage stopped on its own criterion rather than the budget.
        """
        cfg = self.cfg
        budget = cfg.max_iterations // len(cfg.temperature_schedule)
        steps = 0
        stage_converged = False
        for t in cfg.temperature_schedule:
            tau = t / self.scale
            eta = cfg.learning_rate
            val, grad, v = self.soft(theta, tau)
            stage_converged = False
            for _ in range(budget):
                # tangent component of the gradient on the unit sphere
                radial = self.space.inner(theta, grad, a_proj=v)
                g = grad - radial * theta
                gn = self.space.norm(g)
                if gn * self.scale < cfg.tolerance or eta < cfg.tolerance:
                    stage_converged = True
                    break
                steps += 1
                trial = self.normalize(theta + (eta / gn) * g)
                t_val, t_grad, t_v = self.soft(trial, tau)
                if t_val >= val:
                    theta, val, grad, v = trial, t_val, t_grad, t_v
                    eta = min(1.5 * eta, 1.0)
                else:
                    eta *= 0.5
        return theta, steps, stage_converged

    def refine(self, theta):
        """Improve ``theta`` by solving the margin stationarity conditions on
        small sets of boundary samples.

        For support sets ``S+`` and ``S-`` the optimal normal is a difference of
        convex combinations ``sum a_i x_i - sum c_j x_j`` with equal projections
        inside each set.  Candidates that raise the hard margin are kept.
        Returns ``(theta, certified)``; ``certified`` means the KKT conditions of
        the separable problem hold at the returned point.
        """
        v = self.space.project(theta)
        best_m, _ = self.hard(v)
        best, certified = theta, False
        for _ in range(50):
            improved = False
            v = self.space.project(best)
            for S_pos, S_neg in self._candidate_sets(v):
                cand = self._solve_subset(S_pos, S_neg)
                if cand is None:
                    continue
                theta_c, beta = cand
                for sign in (1.0, -1.0):
                    vc = sign * self.space.project(theta_c)
                    m, _ = self.hard(vc)
                    if m > best_m + 1e-14 * self.scale:
                        best_m, best = m, sign * theta_c
                        certified = sign > 0 and self._certify(vc, S_pos, S_neg, beta, m)
                        improved = True
            if not improved:
                break
        if not certified and best_m > 0:
            v = self.space.project(best)
            S_pos, S_neg = self._active(v)
            cand = self._solve_subset(S_pos, S_neg)
            if cand is not None:
                theta_c, beta = cand
                vc = self.space.project(theta_c)
                m, _ = self.hard(vc)
                if m >= best_m - 1e-12 * self.scale and self._certify(vc, S_pos, S_neg, beta, m):
                    # exact stationary point of the active set; replaces a
                    # numerically equal annealed point
                    best, certified = theta_c, True
        return best, certified

    def _active(self, v):
        p, q = v[self.pos], v[self.neg]
        tol = 1e-9 * self.scale
        S_pos = self.pos[p <= p.min() + tol]
        S_neg = self.neg[q >= q.max() - tol]
        return S_pos, S_neg

    def _certify(self, v, S_pos, S_neg, beta, m):
        if m <= 0:
            return False
        k = len(S_pos)
        if np.any(beta[:k] < -1e-10) or np.any(beta[k:] > 1e-10):
            return False
        tol = 1e-9 * self.scale
        p, q = v[self.pos], v[self.neg]
        return (v[S_pos].max() <= p.min() + tol) and (v[S_neg].min() >= q.max() - tol)

    def _candidate_sets(self, v):
        order_pos = self.pos[np.argsort(v[self.pos], kind="stable")]
        order_neg = self.neg[np.argsort(-v[self.neg], kind="stable")]
        max_support = self.space.max_support()
        kp = min(len(order_pos), max_support, _PREFIX_CAP)
        kn = min(len(order_neg), max_support, _PREFIX_CAP)
        seen = set()
        for a in range(1, kp + 1):
            for c in range(1, kn + 1):
                if a + c <= max_support:
                    seen.add((tuple(order_pos[:a]), tuple(order_neg[:c])))
                    yield order_pos[:a], order_neg[:c]
        # exhaustive small subsets of the nearest samples
        pool = min(max_support + 1, 8)
        pp, pn = order_pos[:pool], order_neg[:pool]
        sizes = [(a, c) for a in range(1, len(pp) + 1) for c in range(1, len(pn) + 1)
                 if a + c <= max_support]
        count = sum(math.comb(len(pp), a) * math.comb(len(pn), c) for a, c in sizes)
        if count > _MAX_SUBSETS:
            return
        for a, c in sizes:
            for sp in itertools.combinations(pp, a):
                for sn in itertools.combinations(pn, c):
                    if (sp, sn) not in seen:
                        yield np.array(sp), np.array(sn)

    def _solve_subset(self, S_pos, S_neg):
        S = np.concatenate([S_pos, S_neg])
        k, size = len(S_pos), len(S)
        G = self.space.gram_sub(S)
        A = np.zeros((size, size))
        rhs = np.zeros(size)
        row = 0
        for r in range(1, k):
            A[row] = G[r] - G[0]
            row += 1
        for r in range(k + 1, size):
            A[row] = G[r] - G[k]
            row += 1
        A[row, :k] = 1.0
        rhs[row] = 1.0
        A[row + 1, k:] = 1.0
        rhs[row + 1] = -1.0
        beta, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        if not np.all(np.isfinite(beta)):
            return None
        theta = self.space.from_subset(S, beta)
        nrm = self.space.norm(theta)
        if not nrm > 1e-12:
            return None
        return theta / nrm, beta / nrm

    def run(self, theta0):
        theta = self.normalize(theta0)
        theta, steps, converged = self.anneal(theta)
        certified = False
        if self.cfg.refine:
            theta, certified = self.refine(theta)
        theta = self.normalize(theta)
        return theta, steps, converged or certified, certified


def _starts(space, cfg: PossTrainConfig):
    """Seeded random starts in antithetic pairs (each odd start negates the
    previous one), so both orientations are always explored."""
    rng = np.random.default_rng(cfg.seed)
    prev = None
    for k in range(cfg.restarts):
        if k % 2 == 1 and prev is not None:
            yield -prev
        else:
            prev = space.random(rng)
            yield prev


def _train(problem: _Problem, cfg: PossTrainConfig):
    best = None
    for k, theta0 in enumerate(_starts(problem.space, cfg)):
        try:
            theta, steps, converged, certified = problem.run(theta0)
        except DegenerateError:
            continue
        v = problem.space.project(theta)
        m, b = problem.hard(v)
        obj = float(log_sigmoid(m / 2) * 2)
        if not math.isfinite(obj):
            raise DivergedError(f"non-finite objective in restart {k}", iteration=steps)
        if best is None or obj > best[0]:
            best = (obj, k, theta, v, b, steps, converged, certified)
    if best is None:
        raise DegenerateError("every restart produced a degenerate direction")
    return best


def _report(problem: _Problem, best, cfg) -> TrainingReport:
    obj, k, theta, v, b, steps, converged, certified = best
    f = v + b
    top = float(f[problem.pos].min())
    bottom = float(f[problem.neg].max())
    m = top - bottom
    tau = cfg.temperature_schedule[-1] / problem.scale
    soft_val, *_ = soft_possibilistic_terms(v[problem.pos], v[problem.neg], b, tau)
    hard_val = float(log_sigmoid(top) + log_sigmoid(-bottom))
    return TrainingReport(
        final_objective=hard_val,
        iterations=steps,
        converged=bool(converged),
        margin=m if m >= 0 else None,
        overlap=-m if m < 0 else None,
        bias_bisect_residual=abs(top + bottom),
        extras={"restart": k, "certified_optimal": bool(certified),
                "soft_objective": soft_val, "final_temperature": tau},
    )


def train_possibilistic_linear(data: Dataset, cfg: PossTrainConfig = PossTrainConfig()):
    """Maximum-margin hyperplane with ``|w| = 1`` and the halfway bias."""
    data = data.as_two_class()
    problem = _Problem(_InputSpace(data.features), data.labels, cfg)
    best = _train(problem, cfg)
    w = best[2] / np.linalg.norm(best[2])
    assert abs(np.linalg.norm(w) - 1.0) <= UNIT_NORM_TOL
    b = optimal_bias(w, data)
    # the report is rebuilt from the exact final (w, b)
    v = data.features @ w
    best = best[:2] + (w, v, b) + best[5:]
    return LinearModel(w, b), _report(problem, best, cfg)


def train_possibilistic_kernel(data: Dataset, kernel: KernelSpec,
                               cfg: PossTrainConfig = PossTrainConfig()):
    """Possibilistic classifier in kernel feature space.

    The decision function is ``sum_i beta_i K(x, x_i) + b`` with
    ``beta^T G beta = 1``, so ``|f(x)|`` is the feature-space distance to the
    hyperplane.
    """
    data = data.as_two_class()
    gram = GramOperator(kernel, data.features)
    problem = _Problem(_FeatureSpace(gram), data.labels, cfg)
    best = _train(problem, cfg)
    beta, b = best[2], best[4]
    model = KernelModel(beta, b, kernel, data.features, data.labels)
    return model, _report(problem, best, cfg)

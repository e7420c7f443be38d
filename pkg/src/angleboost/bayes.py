"""Cost-sensitive Bayes rule, population risk minimisation and probability recovery.

Everything here works pointwise in ``x``: a class distribution ``p`` (the
conditional probabilities P(Y = j | X = x)) stands in for the data.

The conditional risk of a decision vector ``f`` is

    r(f) = sum_j sum_t C[j, t] p_j l(-<w_t, f>) = sum_t q_t l(-<w_t, f>),

with ``q = C^T p`` the vector of expected costs of predicting each class.  At
its minimiser the weights ``-q_t l'(-<w_t, f*>)`` are all equal, which lets
``q`` (and, for invertible ``C``, ``p``) be read back off ``f*``.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .loss import as_cost_matrix
from .simplex import SimplexCode

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-12


class SingularCostMatrixError(ValueError):
    """The cost matrix cannot be inverted for probability recovery."""


def check_distribution(p, K=None, tol=1e-10):
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or (K is not None and p.shape[0] != K):
        raise ValueError(f"expected a probability vector of length {K}, got shape {p.shape}")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError(f"probabilities must be finite and non-negative: {p}")
    if abs(p.sum() - 1.0) > tol:
        raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
    return p


def class_expected_costs(C, p):
    """Expected cost ``sum_j C[j, k] p_j`` of predicting each class ``k``."""
    C = as_cost_matrix(C)
    p = check_distribution(p, C.K)
    return C.C.T @ p


def bayes_rule(C, p) -> int:
    """Cost-minimising class (1-based); ties go to the smallest index."""
    return int(np.argmin(class_expected_costs(C, p))) + 1


def conditional_risk(code: SimplexCode, C, loss, p, f) -> float:
    C = as_cost_matrix(C)
    q = class_expected_costs(C, p)
    s = code.scores(f)
    return float(np.dot(q, loss.value(-s)))


@dataclass
class RiskMinimizer:
    f_star: np.ndarray
    achieved_risk: float
    converged: bool
    iterations: int
    grad_norm: float = np.nan


def _risk_parts(W, q, loss, f, order=1):
    s = W @ f
    z = -s
    r = float(np.dot(q, loss.value(z)))
    d = q * loss.derivative(z)
    g = -W.T @ d
    if order == 1:
        return r, g
    h = q * loss.second_derivative(z)
    H = (W.T * h) @ W
    return r, g, H


def minimize_conditional_risk(code: SimplexCode, C, loss, p, tol=1e-9, max_iter=10_000):
    """Numerically minimise the conditional risk over f in R^(K-1).

    Damped Newton steps with an Armijo backtracking line search; whenever the
    Hessian is not positive definite (or the loss has no second derivative)
    the step falls back to steepest descent.  Non-convergence is reported
    through ``converged=False``, never raised.
    """
    C = as_cost_matrix(C)
    if C.K != code.K:
        raise ValueError(f"cost matrix is {C.K}x{C.K} but the code has K={code.K}")
    q = class_expected_costs(C, p)
    W = code.vertices
    has_hessian = hasattr(loss, "second_derivative")
    eps = np.finfo(float).eps

    f = np.zeros(code.dim)
    r, g = _risk_parts(W, q, loss, f)
    gnorm = float(np.linalg.norm(g))
    it = 0
    while gnorm > tol and it < max_iter:
        it += 1
        direction = -g
        if has_hessian:
            _, _, H = _risk_parts(W, q, loss, f, order=2)
            try:
                cho = scipy.linalg.cho_factor(H)
                newton = -scipy.linalg.cho_solve(cho, g)
                if np.all(np.isfinite(newton)) and np.dot(newton, g) < 0:
                    direction = newton
            except (np.linalg.LinAlgError, ValueError):
                pass
        slope = float(np.dot(g, direction))
        t = 1.0
        accepted = False
        while t > 1e-20:
            cand = f + t * direction
            r_new, g_new = _risk_parts(W, q, loss, cand)
            if np.isfinite(r_new):
                if r_new <= r + 1e-4 * t * slope:
                    accepted = True
                # near the optimum the decrease drops below rounding; accept
                # steps that shrink the gradient without raising the risk
                elif (r_new <= r + 64 * eps * abs(r)
                      and np.linalg.norm(g_new) < gnorm):
                    accepted = True
            if accepted:
                break
            t *= 0.5
        if not accepted:
            log.debug("line search stalled at iteration %d, |grad|=%.3g", it, gnorm)
            break
        f, r, g = cand, r_new, g_new
        gnorm = float(np.linalg.norm(g))

    return RiskMinimizer(f_star=f, achieved_risk=r, converged=gnorm <= tol,
                         iterations=it, grad_norm=gnorm)


def _inverse_derivatives(code, loss, f_star):
    s = code.scores(f_star)
    d = np.asarray(loss.derivative(-s), dtype=np.float64)
    if np.any(d == 0) or not np.all(np.isfinite(d)):
        raise ValueError("loss derivative vanishes or is not finite at -<w_t, f>; "
                         "cannot invert the stationarity condition")
    return 1.0 / d


def _lu_transpose(C):
    """LU factors of C^T, refusing pivots below PIVOT_TOL (relative to max |C|)."""
    with warnings.catch_warnings():
        # an exactly singular matrix is reported below with a clearer message
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(C.C.T, check_finite=True)
    scale = max(1.0, float(np.abs(C.C).max()))
    if np.min(np.abs(np.diag(lu))) < PIVOT_TOL * scale:
        label = C.name or "cost matrix"
        raise SingularCostMatrixError(f"{label} is singular (pivot below {PIVOT_TOL:g}); "
                                      "class probabilities cannot be recovered")
    return lu, piv


def expected_costs_from_f(code: SimplexCode, C, loss, f_star) -> np.ndarray:
    """Expected cost of each class implied by a minimiser ``f_star``.

    Each value is ``-M / l'(-<w_t, f_star>)``; the normaliser ``M`` is fixed by
    requiring the implied probabilities ``(C^T)^{-1} q`` to sum to one.  For a
    singular ``C`` the minimum-norm (pseudo-inverse) solution sets ``M``.

    Plugging a fitted ``f`` in place of the population minimiser gives an
    estimate of the expected costs.
    """
    C = as_cost_matrix(C)
    inv_d = _inverse_derivatives(code, loss, f_star)
    try:
        u = scipy.linalg.lu_solve(_lu_transpose(C), inv_d)
    except SingularCostMatrixError:
        u = np.linalg.pinv(C.C.T) @ inv_d
    total = u.sum()
    if total == 0 or not np.isfinite(total):
        raise ValueError("cannot normalise the expected costs: 1^T (C^T)^-1 l* is zero")
    return inv_d / total


def recover_probabilities(code: SimplexCode, C, loss, f_star) -> np.ndarray:
    """Class probabilities implied by a minimiser ``f_star``.

    Uses the closed form ``P_t = 1 + (1 - K) l*_t / sum_k l*_k`` for 0/1 costs
    (``l*_t = 1 / l'(-<w_t, f>)``) and a linear solve against ``C^T`` otherwise.
    Raises :class:`SingularCostMatrixError` when ``C`` is singular.
    """
    C = as_cost_matrix(C)
    inv_d = _inverse_derivatives(code, loss, f_star)
    if C.is_zero_one():
        return 1.0 + (1.0 - code.K) * inv_d / inv_d.sum()
    u = scipy.linalg.lu_solve(_lu_transpose(C), inv_d)
    return u / u.sum()


@dataclass
class FisherTrial:
    trial: int
    p: np.ndarray
    bayes_class: int
    predicted_class: int
    converged: bool

    @property
    def passed(self):
        return self.bayes_class == self.predicted_class


@dataclass
class FisherReport:
    trials: list = field(default_factory=list)

    @property
    def pass_rate(self):
        if not self.trials:
            return float("nan")
        return sum(t.passed for t in self.trials) / len(self.trials)

    @property
    def failures(self):
        return [t for t in self.trials if not t.passed]

    def to_csv(self, path_or_file, header_comment=None):
        import csv

        K = len(self.trials[0].p) if self.trials else 0
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
        try:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", *[f"p{k}" for k in range(1, K + 1)],
                        "bayes_class", "predicted_class", "pass"])
            for t in self.trials:
                w.writerow([t.trial, *[repr(float(v)) for v in t.p],
                            t.bayes_class, t.predicted_class, int(t.passed)])
        finally:
            if own:
                fh.close()


def sample_separated_distribution(rng, C, margin=0.02, max_draws=100_000):
    """Draw p ~ Dirichlet(1,...,1) until the best class beats the runner-up by ``margin``."""
    C = as_cost_matrix(C)
    for _ in range(max_draws):
        p = rng.dirichlet(np.ones(C.K))
        q = np.sort(C.C.T @ p)
        if q[1] - q[0] > margin:
            return p
    raise RuntimeError(f"no distribution with Bayes margin > {margin} in {max_draws} draws")


def check_fisher_consistency(code: SimplexCode, C, loss, trials=200, seed=0, margin=0.02,
                             tol=1e-9):
    """Check numerically that minimising the conditional risk recovers the Bayes class.

    Trial ``i`` draws its distribution from an independent stream
    ``SeedSequence(seed, spawn_key=(i,))`` so trials can be run in any order.
    """
    C = as_cost_matrix(C)
    if C.K != code.K:
        raise ValueError(f"cost matrix is {C.K}x{C.K} but the code has K={code.K}")
    report = FisherReport()
    for i in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        p = sample_separated_distribution(rng, C, margin)
        res = minimize_conditional_risk(code, C, loss, p, tol=tol)
        report.trials.append(FisherTrial(trial=i + 1, p=p, bayes_class=bayes_rule(C, p),
                                         predicted_class=code.predict(res.f_star),
                                         converged=res.converged))
    return report


__all__ = [
    "SingularCostMatrixError", "RiskMinimizer", "FisherReport", "FisherTrial",
    "bayes_rule", "class_expected_costs", "conditional_risk", "minimize_conditional_risk",
    "expected_costs_from_f", "recover_probabilities", "check_fisher_consistency",
    "check_distribution", "sample_separated_distribution",
]

"""Angle-based cost-sensitive boosting with exponential and logit losses.

Both algorithms grow ``f(x) = sum_m beta_m * w_{Phi_m(x)}``, where each weak
learner ``Phi_m`` is a small tree fit to the current cost-weight table
``alpha`` and its class output is embedded as the matching simplex vertex.

* AdaBoost (exponential loss): ``alpha[i, k] ~ C[y_i, k] exp(<f(x_i), w_k>)``
  and the step size has a closed form in the weighted error ``eps``.
* LogitBoost (logit loss): ``alpha[i, k] ~ C[y_i, k] g / (1 + g)`` with
  ``g = exp(<f(x_i), w_k>)``; the step size comes from a scalar line search.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .loss import as_cost_matrix
from .simplex import SimplexCode, build_simplex
from .tree import Tree, TreeLearner

log = logging.getLogger(__name__)

EPS_FLOOR = 1e-10
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class LineSearchError(RuntimeError):
    """The scalar line search could not bracket a minimum."""


@dataclass
class BoostConfig:
    rounds: int = 200
    max_leaves: int = 4
    line_search_tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if int(self.rounds) < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if int(self.max_leaves) < 2:
            raise ValueError(f"max_leaves must be >= 2, got {self.max_leaves}")
        if not self.line_search_tol > 0:
            raise ValueError("line_search_tol must be positive")


@dataclass(frozen=True)
class Member:
    beta: float
    tree: Tree
    round: int


@dataclass
class RoundInfo:
    """Diagnostics for one boosting round (weights are kept only on request)."""

    round: int
    epsilon: float
    beta: float
    accepted: bool
    alpha: np.ndarray = field(default=None, repr=False)
    train_f: np.ndarray = field(default=None, repr=False)
    log_gamma: np.ndarray = field(default=None, repr=False)


@dataclass
class Ensemble:
    K: int
    loss_kind: str
    n_features: int
    members: list = field(default_factory=list)
    rounds: int = 0
    history: list = field(default_factory=list, repr=False, compare=False)

    @property
    def code(self) -> SimplexCode:
        return build_simplex(self.K)

    def decision_function(self, X, n_members=None):
        """f(x) for each row of ``X``, shape (n, K-1)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        W = self.code.vertices
        F = np.zeros((X.shape[0], self.K - 1))
        for mem in self.members[:n_members]:
            F += mem.beta * W[mem.tree.predict(X) - 1]
        return F

    def staged_decision_function(self, X):
        """Yield ``(member, f)`` after each member is added, updating f incrementally."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        W = self.code.vertices
        F = np.zeros((X.shape[0], self.K - 1))
        for mem in self.members:
            F += mem.beta * W[mem.tree.predict(X) - 1]
            yield mem, F

    def predict(self, X):
        return self.code.predict(self.decision_function(X))

    def to_text(self) -> str:
        lines = ["angleboost-ensemble 1",
                 f"K {self.K}",
                 f"loss {self.loss_kind}",
                 f"n_features {self.n_features}",
                 f"rounds {self.rounds}",
                 f"members {len(self.members)}"]
        for i, mem in enumerate(self.members, start=1):
            lines.append(f"member {i} round {mem.round} beta {float(mem.beta)!r} "
                         f"nodes {mem.tree.node_count}")
            lines.extend(mem.tree.to_lines())
        lines.append("end")
        return "\n".join(lines) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())

    @classmethod
    def from_text(cls, text):
        ens, _ = parse_ensemble(text.splitlines())
        return ens

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())


def parse_ensemble(lines):
    """Parse an ensemble block; returns ``(ensemble, remaining_lines)``."""
    lines = [ln for ln in lines if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0].split()[0] != "angleboost-ensemble":
        raise ValueError("not an angleboost ensemble file")
    head = {}
    pos = 1
    for key in ("K", "loss", "n_features", "rounds", "members"):
        parts = lines[pos].split()
        if parts[0] != key or len(parts) != 2:
            raise ValueError(f"expected header field {key!r}, got {lines[pos]!r}")
        head[key] = parts[1]
        pos += 1
    K, d = int(head["K"]), int(head["n_features"])
    members = []
    for _ in range(int(head["members"])):
        parts = lines[pos].split()
        if parts[0] != "member" or len(parts) != 8:
            raise ValueError(f"malformed member header {lines[pos]!r}")
        rnd, beta, nodes = int(parts[3]), float(parts[5]), int(parts[7])
        tree = Tree.from_lines(lines[pos + 1:pos + 1 + nodes], d)
        if np.any(tree.label[tree.feature < 0] > K):
            raise ValueError(f"leaf label exceeds K={K} in member {parts[1]}")
        members.append(Member(beta, tree, rnd))
        pos += 1 + nodes
    if pos >= len(lines) or lines[pos].strip() != "end":
        raise ValueError("ensemble block is missing its 'end' line")
    ens = Ensemble(K=K, loss_kind=head["loss"], n_features=d, members=members,
                   rounds=int(head["rounds"]))
    return ens, lines[pos + 1:]


def ensemble_f(e: Ensemble, x):
    return e.decision_function(np.asarray(x, dtype=np.float64)[None, :])[0]


def ensemble_predict(e: Ensemble, x) -> int:
    return e.code.predict(ensemble_f(e, x))


def adaboost_beta(eps, K):
    """Closed-form AdaBoost step: ((K-1)/K) [log((1-eps)/eps) - log(K-1)]."""
    return (K - 1) / K * (math.log((1.0 - eps) / eps) - math.log(K - 1))


def golden_section(objective, lo, hi, tol=1e-8, max_iter=500):
    """Minimise a unimodal function on ``[lo, hi]`` until the bracket is narrower than ``tol``."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = objective(c), objective(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = objective(d)
    return c if fc <= fd else d


def line_search_beta(objective, tol=1e-8, upper=50.0):
    """Minimise a convex scalar function over beta >= 0.

    The bracket starts at [0, 1] and doubles its right end until the objective
    turns upward; golden-section search then narrows it to ``tol``.  The
    returned point is never worse than beta = 0.  Raises
    :class:`LineSearchError` once the bracket would pass ``upper``.
    """
    f0 = objective(0.0)
    lo, mid, hi = 0.0, 1.0, 1.0
    f_mid = objective(mid)
    if f_mid >= f0:
        lo, hi = 0.0, 1.0
    else:
        hi = 2.0
        f_hi = objective(hi)
        while f_hi < f_mid:
            if hi * 2.0 > upper:
                raise LineSearchError(f"objective still decreasing at beta={hi:g}; "
                                      f"no minimum below {upper:g}")
            lo, mid, f_mid = mid, hi, f_hi
            hi *= 2.0
            f_hi = objective(hi)
    beta = golden_section(objective, lo, hi, tol)
    return beta if objective(beta) <= f0 else 0.0


def _prepare(data, C):
    C = as_cost_matrix(C)
    X = np.asarray(data.X, dtype=np.float64)
    y = np.asarray(data.y).astype(np.intp)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise ValueError("data must hold n >= 1 rows of features and n labels")
    if y.min() < 1 or y.max() > C.K:
        raise ValueError(f"labels must lie in 1..{C.K} to match the cost matrix")
    return C, X, y


def _vertex_margins(pred, K):
    """<w_pred(i), w_k> for every row: 1 on the predicted class, 1/(1-K) elsewhere."""
    A = np.full((pred.shape[0], K), 1.0 / (1.0 - K))
    A[np.arange(pred.shape[0]), pred - 1] = 1.0
    return A


def adaboost_fit(data, C, cfg=None, keep_history=False) -> Ensemble:
    """Angle-based cost-sensitive multicategory AdaBoost.

    Parameters
    ----------
    data : object with ``X`` (n, d) and ``y`` (n,) in 1..K
    C : CostMatrix or array_like
    cfg : BoostConfig
    keep_history : bool
        Store the weight table and training ``f`` after every round in
        ``ensemble.history`` (memory O(rounds * n * K)).
    """
    cfg = cfg or BoostConfig()
    C, X, y = _prepare(data, C)
    K = C.K
    code = build_simplex(K)
    W = code.vertices
    learner = TreeLearner(X)
    ens = Ensemble(K=K, loss_kind="exponential", n_features=X.shape[1], rounds=cfg.rounds)

    cost_rows = C.C[y - 1]
    alpha = cost_rows / cost_rows.sum()
    F = np.zeros((X.shape[0], K - 1))
    beta_cap = adaboost_beta(EPS_FLOOR, K)
    for m in range(1, cfg.rounds + 1):
        tree = learner.fit(alpha, cfg.max_leaves)
        pred = tree.predict(X)
        eps = float(alpha[np.arange(len(pred)), pred - 1].sum() / alpha.sum())
        if eps >= 1.0 - 1e-12:
            log.warning("round %d: weak learner puts all weight on wrong classes "
                        "(eps=%.6g); stopping", m, eps)
            ens.history.append(RoundInfo(m, eps, 0.0, False))
            break
        beta = beta_cap if eps < EPS_FLOOR else adaboost_beta(eps, K)
        if beta <= 0:
            # the tree is refit on the same weights next round, so every later
            # round would be skipped as well
            log.info("round %d: eps=%.6g is no better than guessing; stopping", m, eps)
            ens.history.append(RoundInfo(m, eps, beta, False))
            break
        alpha = alpha * np.exp(beta * _vertex_margins(pred, K))
        alpha /= alpha.sum()
        F += beta * W[pred - 1]
        ens.members.append(Member(beta, tree, m))
        ens.history.append(RoundInfo(m, eps, beta, True,
                                     alpha=alpha.copy() if keep_history else None,
                                     train_f=F.copy() if keep_history else None))
    return ens


def logit_step_objective(cost_rows, log_gamma, A):
    """R(beta) = sum_ik C[y_i, k] log(1 + gamma_ik exp(beta A_ik)) over positive-cost terms."""
    mask = cost_rows > 0
    c, s, a = cost_rows[mask], log_gamma[mask], A[mask]

    def objective(beta):
        return float(np.dot(c, np.logaddexp(0.0, s + beta * a)))

    def derivative(beta):
        return float(np.dot(c * a, expit(s + beta * a)))

    return objective, derivative


def logitboost_fit(data, C, cfg=None, keep_history=False) -> Ensemble:
    """Angle-based cost-sensitive multicategory LogitBoost.

    ``gamma = exp(<f, w_k>)`` is carried in log form so long runs cannot
    overflow; ``alpha = C * gamma / (1 + gamma)`` is then a logistic sigmoid.
    Arguments are as for :func:`adaboost_fit`.
    """
    cfg = cfg or BoostConfig()
    C, X, y = _prepare(data, C)
    K = C.K
    code = build_simplex(K)
    W = code.vertices
    learner = TreeLearner(X)
    ens = Ensemble(K=K, loss_kind="logit", n_features=X.shape[1], rounds=cfg.rounds)

    cost_rows = C.C[y - 1]
    log_gamma = np.zeros_like(cost_rows)
    alpha = cost_rows / cost_rows.sum()
    F = np.zeros((X.shape[0], K - 1))
    beta_cap = adaboost_beta(EPS_FLOOR, K)
    for m in range(1, cfg.rounds + 1):
        tree = learner.fit(alpha, cfg.max_leaves)
        pred = tree.predict(X)
        eps = float(alpha[np.arange(len(pred)), pred - 1].sum() / alpha.sum())
        A = _vertex_margins(pred, K)
        objective, derivative = logit_step_objective(cost_rows, log_gamma, A)
        if derivative(0.0) >= 0:
            log.info("round %d: tree gives no descent direction (eps=%.6g); stopping", m, eps)
            ens.history.append(RoundInfo(m, eps, 0.0, False))
            break
        try:
            beta = line_search_beta(objective, cfg.line_search_tol)
        except LineSearchError as exc:
            if eps == 0.0:
                # a perfect weak learner makes the objective decrease forever
                beta = beta_cap
            else:
                log.warning("round %d: line search failed (%s); stopping", m, exc)
                ens.history.append(RoundInfo(m, eps, float("nan"), False))
                break
        if beta <= 0:
            ens.history.append(RoundInfo(m, eps, beta, False))
            break
        log_gamma = log_gamma + beta * A
        alpha = cost_rows * expit(log_gamma)
        alpha /= alpha.sum()
        F += beta * W[pred - 1]
        ens.members.append(Member(beta, tree, m))
        ens.history.append(RoundInfo(m, eps, beta, True,
                                     alpha=alpha.copy() if keep_history else None,
                                     train_f=F.copy() if keep_history else None,
                                     log_gamma=log_gamma.copy() if keep_history else None))
    return ens


ALGORITHMS = {"adaboost": adaboost_fit, "logitboost": logitboost_fit}


def fit(algorithm, data, C, cfg=None, keep_history=False) -> Ensemble:
    try:
        fn = ALGORITHMS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of "
                         f"{sorted(ALGORITHMS)}") from None
    return fn(data, C, cfg, keep_history)

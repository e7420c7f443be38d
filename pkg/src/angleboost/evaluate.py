"""Test cost, built-in cost matrices and the replicated experiment runner."""

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import data as data_mod
from .boost import BoostConfig, fit
from .loss import CostMatrix, as_cost_matrix

log = logging.getLogger(__name__)

SIM1 = [[0, 2, 2],
        [1, 0, 1],
        [1, 1, 0]]

SIM2 = [[0.0, 1.0, 2.0, 2.0],
        [1.0, 0.0, 2.0, 2.0],
        [0.5, 0.5, 0.0, 1.0],
        [0.5, 0.5, 1.0, 0.0]]

BUILTIN_COSTS = ("zero_one", "sim1", "sim2", "linear", "partitioned_linear")


def builtin_cost(name, K=None) -> CostMatrix:
    """Named cost matrix.

    ``zero_one``: 1 off the diagonal.  ``linear``: ``|j - k|``.
    ``partitioned_linear``: ``k - j`` when predicting a higher class,
    ``10 (j - k)`` when predicting a lower one.  ``sim1``/``sim2``: the fixed
    3- and 4-class matrices of the waveform and Gaussian benchmarks.
    """
    if name in ("sim1", "sim2"):
        M = np.array(SIM1 if name == "sim1" else SIM2, dtype=np.float64)
        if K is not None and K != M.shape[0]:
            raise ValueError(f"{name} is a {M.shape[0]}-class matrix, not K={K}")
        return CostMatrix(M, name=name)
    if name not in BUILTIN_COSTS:
        raise ValueError(f"unknown cost matrix {name!r}; expected one of {BUILTIN_COSTS}")
    if K is None or K < 2:
        raise ValueError(f"{name} needs K >= 2")
    j, k = np.indices((K, K)) + 1
    if name == "zero_one":
        M = (j != k).astype(np.float64)
    elif name == "linear":
        M = np.abs(j - k).astype(np.float64)
    else:
        M = np.where(k >= j, k - j, 10 * (j - k)).astype(np.float64)
    return CostMatrix(M, name=f"{name}({K})")


def resolve_cost(ref, K=None) -> CostMatrix:
    """A CostMatrix, a builtin name, or a path to a K x K CSV."""
    if isinstance(ref, CostMatrix):
        return ref
    if isinstance(ref, str) and ref in BUILTIN_COSTS:
        return builtin_cost(ref, K)
    if isinstance(ref, (str, os.PathLike)):
        C = CostMatrix.from_csv(ref)
        if K is not None and C.K != K:
            raise ValueError(f"cost matrix {ref} is {C.K}x{C.K} but the data have K={K}")
        return C
    return as_cost_matrix(ref)


def test_cost(C, predictions, labels) -> float:
    """Mean of ``C[y_i, pred_i]`` over a test set."""
    C = as_cost_matrix(C)
    predictions = np.asarray(predictions).astype(np.intp)
    labels = np.asarray(labels).astype(np.intp)
    if predictions.shape != labels.shape:
        raise ValueError(f"{predictions.shape[0]} predictions for {labels.shape[0]} labels")
    if labels.size == 0:
        raise ValueError("test cost of an empty set is undefined")
    return float(C.C[labels - 1, predictions - 1].mean())


test_cost.__test__ = False  # not a pytest test


@dataclass(frozen=True)
class CsvSource:
    """A CSV dataset split afresh each replication."""

    path: str
    label_column: str
    schema: Optional[dict] = None
    train_fraction: float = 0.04
    stratified: bool = True
    standardize: bool = True


@dataclass
class ExperimentSpec:
    dataset: Union[data_mod.GeneratorSpec, CsvSource]
    algorithm: str = "adaboost"
    cost: object = "zero_one"
    rounds: int = 200
    replications: int = 100
    seed: int = 0
    max_leaves: int = 4

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.algorithm not in ("adaboost", "logitboost"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")


@dataclass
class CostCurve:
    """Test cost after every round for every successful replication."""

    costs: np.ndarray  # (replications, rounds)
    replication_ids: list = field(default_factory=list)
    failed: dict = field(default_factory=dict)  # replication -> error message

    @property
    def mean(self):
        return self.costs.mean(axis=0)

    @property
    def se(self):
        r = self.costs.shape[0]
        if r < 2:
            return np.full(self.costs.shape[1], np.nan)
        return self.costs.std(axis=0, ddof=1) / np.sqrt(r)

    @property
    def final_mean(self):
        return float(self.mean[-1])

    @property
    def final_se(self):
        return float(self.se[-1])

    def write_curves(self, path, header_comment=None):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["replication", "round", "test_cost"])
            for rep, row in zip(self.replication_ids, self.costs):
                for m, v in enumerate(row, start=1):
                    w.writerow([rep, m, repr(float(v))])

    def write_summary(self, path, header_comment=None):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            if self.failed:
                fh.write(f"# failed replications: {sorted(self.failed)}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["round", "mean", "se"])
            for m, (mu, se) in enumerate(zip(self.mean, self.se), start=1):
                w.writerow([m, repr(float(mu)), repr(float(se))])


def _load_source(source: CsvSource):
    return data_mod.load_csv(source.path, source.label_column, source.schema)


def replication_data(spec: ExperimentSpec, rep, full=None):
    """Train/test datasets for replication ``rep`` (0-based)."""
    if isinstance(spec.dataset, data_mod.GeneratorSpec):
        return data_mod.generate(spec.dataset, rep)
    src = spec.dataset
    full = full if full is not None else _load_source(src)
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(rep,)))
    if src.stratified:
        tr, te = data_mod.stratified_split(full.y, src.train_fraction, rng)
    else:
        tr, te = data_mod.random_split(full.n, src.train_fraction, rng)
    train, test = full.subset(tr), full.subset(te)
    if src.standardize:
        st = data_mod.standardize(train, [test])
        train, test = st.train, st.others[0]
    return train, test


def cost_path(ensemble, C, X_test, y_test, rounds):
    """Test cost of the partial ensemble after each of ``rounds`` rounds.

    Test-set decision values are updated one member at a time.  Rounds where
    no member was added repeat the previous cost.
    """
    out = np.empty(rounds)
    F = np.zeros((X_test.shape[0], ensemble.K - 1))
    code = ensemble.code
    current = test_cost(C, code.predict(F), y_test)
    filled = 0
    for mem, F in ensemble.staged_decision_function(X_test):
        out[filled:mem.round - 1] = current
        filled = mem.round - 1
        current = test_cost(C, code.predict(F), y_test)
    out[filled:] = current
    return out


def _run_one(args):
    spec, rep, full = args
    train, test = replication_data(spec, rep, full)
    C = resolve_cost(spec.cost, train.K)
    cfg = BoostConfig(rounds=spec.rounds, max_leaves=spec.max_leaves, seed=spec.seed)
    ens = fit(spec.algorithm, train, C, cfg)
    return cost_path(ens, C, test.X, test.y, spec.rounds)


def _safe_run(args):
    try:
        return args[1], _run_one(args), None
    except Exception as exc:  # one bad replication must not sink the batch
        return args[1], None, f"{type(exc).__name__}: {exc}"


def run_experiment(spec: ExperimentSpec, threads=1) -> CostCurve:
    """Run every replication and collect per-round test costs.

    Replications may run in worker processes; results are assembled in
    replication order, so the output does not depend on ``threads``.
    Failed replications are logged, left out of the curve and listed in
    ``CostCurve.failed``.
    """
    full = _load_source(spec.dataset) if isinstance(spec.dataset, CsvSource) else None
    jobs = [(spec, r, full) for r in range(spec.replications)]
    if threads and threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_safe_run, jobs))
    else:
        results = [_safe_run(j) for j in jobs]
    rows, ids, failed = [], [], {}
    for rep, path, err in sorted(results, key=lambda t: t[0]):
        if err is not None:
            log.error("replication %d failed: %s", rep + 1, err)
            failed[rep + 1] = err
            continue
        log.info("replication %d: final test cost %.4f", rep + 1, path[-1])
        rows.append(path)
        ids.append(rep + 1)
    costs = np.array(rows) if rows else np.empty((0, spec.rounds))
    return CostCurve(costs=costs, replication_ids=ids, failed=failed)

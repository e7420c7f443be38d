"""Command-line entry point: ``angleboost {simulate,train,predict,consistency-check}``.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bayes import check_fisher_consistency, expected_costs_from_f
from .boost import BoostConfig, fit, parse_ensemble
from .data import (GeneratorSpec, SchemaError, TableEncoder, apply_standardization, load_csv,
                   read_table, standardize)
from .evaluate import BUILTIN_COSTS, CsvSource, ExperimentSpec, resolve_cost, run_experiment
from .loss import LOSS_KINDS, CostMatrix, MarginLoss
from .simplex import build_simplex

log = logging.getLogger("angleboost")

# flags that do not change any output value and so stay out of provenance headers
_NOT_RECORDED = {"out", "threads", "verbose", "model", "command", "func"}


class UsageError(Exception):
    pass


def _provenance(args):
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_RECORDED}
    return f"angleboost {__version__} {args.command} " + json.dumps(flags, sort_keys=True)


def _schema(categorical):
    if not categorical:
        return None
    return {name.strip(): "categorical" for name in categorical.split(",") if name.strip()}


def _positive(name):
    def parse(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer, got {text!r}") from None
        if v < 1:
            raise argparse.ArgumentTypeError(f"{name} must be >= 1, got {v}")
        return v
    return parse


def _fraction(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"fraction must lie in (0, 1), got {v}")
    return v


def cmd_simulate(args):
    if args.gen:
        dataset = GeneratorSpec(args.gen, n_train=args.n_train, n_test=args.n_test, seed=args.seed)
    else:
        if not args.label:
            raise UsageError("--csv requires --label")
        dataset = CsvSource(args.csv, args.label, _schema(args.categorical),
                            train_fraction=args.train_fraction,
                            stratified=not args.no_stratify,
                            standardize=not args.no_standardize)
    spec = ExperimentSpec(dataset=dataset, algorithm=args.algo, cost=args.cost,
                          rounds=args.rounds, replications=args.reps, seed=args.seed,
                          max_leaves=args.max_leaves)
    curve = run_experiment(spec, threads=args.threads)
    if curve.costs.shape[0] == 0:
        raise RuntimeError(f"all {args.reps} replications failed: {curve.failed}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = _provenance(args)
    curve.write_curves(out / "curves.csv", header)
    curve.write_summary(out / "summary.csv", header)
    se = curve.final_se
    print(f"final mean test cost {curve.final_mean:.4f}"
          + (f" (se {se:.4f})" if np.isfinite(se) else "")
          + f" over {curve.costs.shape[0]} replication(s); wrote {out}/curves.csv, "
          f"{out}/summary.csv")
    return 0


def cmd_train(args):
    ds = load_csv(args.csv, args.label, _schema(args.categorical))
    C = resolve_cost(args.cost, ds.K)
    means = sds = None
    train = ds
    if args.standardize:
        st = standardize(ds)
        train, means, sds = st.train, st.means, st.sds
    cfg = BoostConfig(rounds=args.rounds, max_leaves=args.max_leaves, seed=args.seed)
    ens = fit(args.algo, train, C, cfg)
    with open(args.model, "w", encoding="utf-8") as fh:
        fh.write(f"# {_provenance(args)}\n")
        fh.write(ens.to_text())
        fh.write("cost " + json.dumps([[float(v) for v in row] for row in C.C]) + "\n")
        fh.write("encoder " + json.dumps(ds.encoder.to_dict()) + "\n")
        if means is not None:
            fh.write("standardize " + json.dumps({"means": [float(v) for v in means],
                                                  "sds": [float(v) for v in sds]}) + "\n")
    print(f"trained {len(ens.members)} member(s) on {ds.n} rows, K={ds.K}; wrote {args.model}")
    return 0


def load_model(path):
    """Read a model file written by ``train``: ``(ensemble, cost, encoder, scaling)``."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    ens, rest = parse_ensemble(lines)
    extra = {}
    for line in rest:
        key, _, payload = line.partition(" ")
        extra[key] = json.loads(payload)
    if "cost" not in extra or "encoder" not in extra:
        raise ValueError(f"{path}: model file lacks its cost or encoder section")
    C = CostMatrix(np.array(extra["cost"]))
    enc = TableEncoder.from_dict(extra["encoder"])
    scaling = extra.get("standardize")
    if scaling is not None:
        scaling = (np.array(scaling["means"]), np.array(scaling["sds"]))
    return ens, C, enc, scaling


def cmd_predict(args):
    ens, C, enc, scaling = load_model(args.model)
    header, rows = read_table(args.csv)
    X, _ = enc.transform(header, rows, path=args.csv, require_label=False)
    if X.shape[1] != ens.n_features:
        raise SchemaError(f"{args.csv}: encodes to {X.shape[1]} features, model expects "
                          f"{ens.n_features}")
    if scaling is not None:
        X = apply_standardization(X, *scaling)
    code = build_simplex(ens.K)
    F = ens.decision_function(X)
    pred = code.predict(F)
    loss = MarginLoss(ens.loss_kind)
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", newline="",
                                                           encoding="utf-8")
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["row", "predicted_class", "predicted_label",
                    *[f"expected_cost_{c}" for c in enc.classes]])
        for i, (f, k) in enumerate(zip(F, pred), start=1):
            costs = expected_costs_from_f(code, C, loss, f)
            w.writerow([i, int(k), enc.classes[k - 1], *(repr(float(v)) for v in costs)])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_consistency_check(args):
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    loss = MarginLoss(args.loss, a=args.a, c=args.c)
    C = resolve_cost(args.cost, args.K)
    code = build_simplex(C.K)
    report = check_fisher_consistency(code, C, loss, trials=args.trials, seed=args.seed,
                                      margin=args.margin)
    if args.out:
        report.to_csv(args.out, header_comment=_provenance(args))
    print(f"{args.loss} loss, K={C.K}, cost {C.name or args.cost}: pass rate "
          f"{report.pass_rate:.4f} over {args.trials} trial(s)")
    return 0 if report.pass_rate == 1.0 else 1


def build_parser():
    p = argparse.ArgumentParser(prog="angleboost",
                                description="Angle-based cost-sensitive multicategory boosting.",
                                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter
    cost_help = f"cost matrix: one of {', '.join(BUILTIN_COSTS)} or a path to a K x K CSV"

    s = sub.add_parser("simulate", formatter_class=fmt,
                       help="replicated train/test runs writing per-round cost curves")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--gen", choices=["waveform", "four_class"], help="synthetic generator")
    src.add_argument("--csv", help="CSV dataset, re-split every replication")
    s.add_argument("--label", help="label column of --csv")
    s.add_argument("--categorical", default="", help="comma-separated categorical columns")
    s.add_argument("--train-fraction", type=_fraction, default=0.04,
                   help="training share of --csv rows")
    s.add_argument("--no-stratify", action="store_true", help="split --csv without stratifying")
    s.add_argument("--no-standardize", action="store_true",
                   help="skip standardising --csv continuous columns")
    s.add_argument("--n-train", type=_positive("--n-train"), default=300,
                   help="generated training rows per replication")
    s.add_argument("--n-test", type=_positive("--n-test"), default=4700,
                   help="generated test rows per replication")
    s.add_argument("--algo", choices=["adaboost", "logitboost"], default="adaboost",
                   help="boosting algorithm")
    s.add_argument("--cost", default="zero_one", help=cost_help)
    s.add_argument("--rounds", type=_positive("--rounds"), default=200, help="boosting rounds")
    s.add_argument("--reps", type=_positive("--reps"), default=100, help="replications")
    s.add_argument("--seed", type=int, default=0, help="root seed of the replication streams")
    s.add_argument("--max-leaves", type=int, default=4, help="leaf budget of each tree")
    s.add_argument("--threads", type=_positive("--threads"), default=os.cpu_count() or 1,
                   help="worker processes for replications")
    s.add_argument("--out", default="results", help="output directory")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("train", formatter_class=fmt, help="fit an ensemble on a CSV")
    t.add_argument("--csv", required=True, help="training CSV with a header row")
    t.add_argument("--label", required=True, help="label column")
    t.add_argument("--categorical", default="", help="comma-separated categorical columns")
    t.add_argument("--cost", default="zero_one", help=cost_help)
    t.add_argument("--algo", choices=["adaboost", "logitboost"], default="adaboost",
                   help="boosting algorithm")
    t.add_argument("--rounds", type=_positive("--rounds"), default=200, help="boosting rounds")
    t.add_argument("--max-leaves", type=int, default=4, help="leaf budget of each tree")
    t.add_argument("--seed", type=int, default=0, help="recorded for provenance")
    t.add_argument("--standardize", action="store_true",
                   help="standardise continuous columns before fitting")
    t.add_argument("--model", required=True, help="output model file")
    t.set_defaults(func=cmd_train)

    r = sub.add_parser("predict", formatter_class=fmt,
                       help="predict classes and plug-in expected costs")
    r.add_argument("--model", required=True, help="model file written by train")
    r.add_argument("--csv", required=True, help="CSV with the training feature columns")
    r.add_argument("--out", default="-", help="output CSV, '-' for stdout")
    r.set_defaults(func=cmd_predict)

    c = sub.add_parser("consistency-check", formatter_class=fmt,
                       help="numerical Fisher-consistency check of a loss")
    c.add_argument("--loss", choices=LOSS_KINDS, default="exponential", help="margin loss")
    c.add_argument("--a", type=float, default=1.0, help="lmum shape a")
    c.add_argument("--c", type=float, default=0.0, help="lmum shape c")
    c.add_argument("--K", type=int, default=3, help="number of classes")
    c.add_argument("--cost", default="zero_one", help=cost_help)
    c.add_argument("--trials", type=int, default=200, help="random distributions to test")
    c.add_argument("--seed", type=int, default=0, help="seed of the trial streams")
    c.add_argument("--margin", type=float, default=0.02,
                   help="minimum gap between the two cheapest classes")
    c.add_argument("--out", default=None, help="per-trial CSV report")
    c.set_defaults(func=cmd_consistency_check)

    for sp in (s, t, r, c):
        sp.add_argument("-v", "--verbose", action="count", default=0,
                        help="repeat for more log output")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "max_leaves", 2) < 2:
        parser.error("--max-leaves must be >= 2")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"angleboost {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

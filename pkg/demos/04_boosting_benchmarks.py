"""Both boosting algorithms on the two synthetic benchmarks (a few replications)."""

from angleboost import ExperimentSpec, GeneratorSpec, run_experiment

REPS = 3  # the published protocol uses 100

for kind, costs in (("waveform", ("zero_one", "sim1")), ("four_class", ("zero_one", "sim2"))):
    for cost in costs:
        for algorithm in ("adaboost", "logitboost"):
            spec = ExperimentSpec(GeneratorSpec(kind, n_train=300, n_test=4700, seed=0),
                                  algorithm=algorithm, cost=cost, rounds=200, replications=REPS)
            curve = run_experiment(spec)
            m = curve.mean
            print(f"{kind:10s} {cost:8s} {algorithm:10s} test cost after 1/50/200 rounds: "
                  f"{m[0]:.3f} {m[49]:.3f} {m[-1]:.3f}  (se {curve.final_se:.3f})")

"""Cost-sensitive losses, the Bayes rule, and a numerical consistency check."""

import numpy as np

from angleboost import (MarginLoss, bayes_rule, build_simplex, builtin_cost,
                        check_fisher_consistency, cs_loss, minimize_conditional_risk, predict)

C = builtin_cost("sim1")          # predicting 2 or 3 when the truth is 1 costs double
print(C.C)

code = build_simplex(3)
f = np.array([0.4, -0.3])
for kind in ("exponential", "logit", "lmum"):
    loss = MarginLoss(kind)
    print(f"{kind:12s} loss of f for each label:",
          np.round([cs_loss(code, C, loss, f, y) for y in (1, 2, 3)], 4))

# the cost-sensitive Bayes rule minimises expected cost, not error
p = np.array([0.3, 0.4, 0.3])
print("most probable class:", np.argmax(p) + 1, " Bayes class under C:", bayes_rule(C, p))

# minimise the conditional risk numerically; the least-angle rule recovers the Bayes class
for kind in ("exponential", "logit", "lmum"):
    res = minimize_conditional_risk(code, C, MarginLoss(kind), p)
    print(f"{kind:12s} f* = {np.round(res.f_star, 4)}  predicts {predict(code, res.f_star)}"
          f"  ({res.iterations} Newton steps)")

# repeat over many random distributions
report = check_fisher_consistency(build_simplex(5), builtin_cost("partitioned_linear", 5),
                                  MarginLoss("logit"), trials=200, seed=1)
print("pass rate over 200 random distributions:", report.pass_rate)

"""Recovering class probabilities and expected costs from a risk minimiser."""

import numpy as np

from angleboost import (MarginLoss, build_simplex, builtin_cost, expected_costs_from_f,
                        minimize_conditional_risk, recover_probabilities)

code = build_simplex(4)
C = builtin_cost("sim2")
rng = np.random.default_rng(3)
p = rng.dirichlet(np.ones(4))
print("true p:     ", np.round(p, 6))

for kind in ("exponential", "logit", "lmum"):
    loss = MarginLoss(kind)
    f_star = minimize_conditional_risk(code, C, loss, p).f_star
    print(f"{kind:12s}", np.round(recover_probabilities(code, C, loss, f_star), 6))

print("expected costs C^T p:", np.round(C.C.T @ p, 6))
f_star = minimize_conditional_risk(code, C, MarginLoss("logit"), p).f_star
print("from f*:            ", np.round(expected_costs_from_f(code, C, MarginLoss("logit"), f_star), 6))

# binary check: with 0/1 costs and exponential loss, <f*, w_1> = log(P1/P2) / 2
f = minimize_conditional_risk(build_simplex(2), 1 - np.eye(2), MarginLoss(), [0.75, 0.25]).f_star
print("K=2: f* =", f[0], " log(3)/2 =", np.log(3) / 2)

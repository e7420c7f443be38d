"""Inside a boosting run: weights, step sizes and the falling training risk."""

import numpy as np

from angleboost import BoostConfig, MarginLoss, adaboost_fit, build_simplex, builtin_cost, \
    empirical_risk, gen_four_class, logitboost_fit

data = gen_four_class(300, seed=0)
C = builtin_cost("sim2")
code = build_simplex(4)

ada = adaboost_fit(data, C, BoostConfig(rounds=30), keep_history=True)
for h in ada.history[:5]:
    print(f"round {h.round}: weighted error {h.epsilon:.3f}  step {h.beta:.3f}")

# every accepted round lowers the exponential training risk
risk = [empirical_risk(code, C, MarginLoss("exponential"), h.train_f, data.y) for h in ada.history]
print("exponential risk, rounds 1..30:", np.round(risk[::5], 4))

logit = logitboost_fit(data, C, BoostConfig(rounds=30), keep_history=True)
risk = [empirical_risk(code, C, MarginLoss("logit"), h.train_f, data.y) for h in logit.history]
print("logit risk, rounds 1..30:      ", np.round(risk[::5], 4))
print("line-searched steps:", np.round([h.beta for h in logit.history[:5]], 4))

# the weight table always equals C[y, k] exp(<f, w_k>), renormalised
h = ada.history[-1]
a = C.C[data.y - 1] * np.exp(code.scores(h.train_f))
print("max weight mismatch:", np.abs(h.alpha - a / a.sum()).max())

print(ada.to_text().splitlines()[:9])

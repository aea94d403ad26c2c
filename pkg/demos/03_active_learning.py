"""
Active learning with a random forest
====================================

Start from a small Latin hypercube, then add the designs where the forest's
trees disagree most. Each round a particle swarm searches for the most
uncertain point, several times with different seeds.
"""

import numpy as np

from autotandem.acquisition import ALConfig, active_learn
from autotandem.benchmarks import get_problem
from autotandem.surrogates import total_uncertainty

prob = get_problem("aidlike")
cfg = ALConfig(n0=20, k=5, n_max=60, model_kind="forest", model_options={"trees": 50})
res = active_learn(prob.evaluate, prob.bounds, cfg, seed=0)

for entry in res.trace:
    print(f"round {entry['round']}: |D| = {entry['n_total']}, "
          f"max uncertainty {max(entry['uncertainty']):.4f}")

# Uncertainty of the final model away from the acquired points
Xq = prob.bounds.from_unit(np.random.default_rng(1).random((200, prob.d)))
print("mean uncertainty on random designs:", np.mean(total_uncertainty(res.model, Xq)).round(4))

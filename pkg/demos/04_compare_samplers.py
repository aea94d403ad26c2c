"""
Comparing samplers end to end
=============================

A miniature version of the full experiment: every method builds a dataset
of the same size, a tandem model is trained on each, and the inverse
predictions are checked against the true response function.
"""

import tempfile
from pathlib import Path

from autotandem.harness import ExperimentConfig, run_experiment, summarize_experiment

cfg = ExperimentConfig(benchmark="psidlike", methods="al,random,lhs,bc,gfp", n_max=60,
                       repetitions=3, seed=0, test_size=300,
                       model_options={"trees": 40}, tandem={"epochs": 300})

out = Path(tempfile.mkdtemp()) / "psid"
records = run_experiment(cfg, out)
print(summarize_experiment(records).table())
print("outputs in", out, sorted(p.name for p in out.iterdir()))

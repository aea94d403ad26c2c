"""
Tandem networks on an invertible map
====================================

A forward net learns x -> y. A second net learns y -> x by passing its
guesses through the frozen forward net and comparing the reconstruction
with the target. On an affine map the inverse is unique, so a good tandem
should nearly recover it.
"""

import numpy as np

from autotandem.benchmarks import BenchmarkProblem, make_test_set
from autotandem.harness import validate_inverse
from autotandem.nn import tandem_fit, tandem_predict_design, tandem_spec
from autotandem.numcore import BoundsBox, LabeledDataset
from autotandem.samplers import lhs_sample

rng = np.random.default_rng(0)
A = rng.normal(size=(6, 4))
c = rng.normal(size=6)
prob = BenchmarkProblem("affine", 4, 6, BoundsBox(np.zeros(4), np.ones(4)),
                        lambda x: A @ x + c, batch_func=lambda X: X @ A.T + c)

X = lhs_sample(prob.bounds, 150, seed=1).points
D = LabeledDataset(X, prob.evaluate_many(X))
t = tandem_fit(D, tandem_spec(), seed=0)
print("forward epochs", len(t.forward_net.loss_history),
      "inverse epochs", len(t.inverse_net.loss_history))

# Ask for the response of a known design and compare
x_true = np.array([0.2, 0.8, 0.5, 0.1])
x_hat = tandem_predict_design(t, prob.evaluate(x_true))
print("true design     ", x_true)
print("recovered design", x_hat.round(3))

ts = make_test_set(prob, 500, seed=2)
print("inverse validation:", validate_inverse(t, prob, ts).to_dict())

import json

import numpy as np
import pytest

from autotandem.acquisition import (
    ALConfig, PsoConfig, active_learn, label_designs, pso_maximize, pso_search,
)
from autotandem.numcore import BoundsBox, derive_seed
from autotandem.samplers import lhs_sample
from autotandem.surrogates import ForestModel

UNIT1 = BoundsBox([0.0], [1.0])


class Counter:
    def __init__(self, f):
        self.f, self.calls = f, 0

    def __call__(self, x):
        self.calls += 1
        return self.f(x)


class ZeroUncertainty:
    d = 2

    def member_predictions(self, X):
        return np.zeros((3, np.atleast_2d(X).shape[0], 4))


def smooth_h(x):
    x = np.asarray(x)
    return np.array([x.sum(), np.sin(3 * x[0]), x[1] ** 2, x[0] * x[1]])


def test_pso_recovers_unimodal_maximum():
    hits = 0
    for s in range(20):
        x = pso_maximize(lambda v: -(v[0] - 0.3) ** 2, UNIT1, PsoConfig(), seed=s)
        hits += abs(x[0] - 0.3) < 0.05
    assert hits >= 19


def test_pso_exact_budget_and_vectorized_agree():
    f = Counter(lambda v: -np.sum((v - 0.2) ** 2))
    b = BoundsBox([0, 0], [1, 1])
    res = pso_search(f, b, PsoConfig(max_evals=37), seed=4)
    assert f.calls == 37 and res.evaluations == 37
    vec = pso_search(lambda X: -np.sum((X - 0.2) ** 2, axis=1), b, PsoConfig(max_evals=37),
                     seed=4, vectorized=True)
    np.testing.assert_array_equal(res.x, vec.x)


def test_pso_constant_objective():
    b = BoundsBox([-1, 2], [1, 5])
    assert b.contains(pso_maximize(lambda v: 1.0, b, seed=0))


def test_pso_degenerate_box():
    b = BoundsBox([0.4, 2.0], [0.4, 2.0])
    f = Counter(lambda v: float(v.sum()))
    np.testing.assert_array_equal(pso_maximize(f, b, seed=1), [0.4, 2.0])
    assert f.calls == 100


def test_pso_nonfinite_objective():
    with pytest.raises(ValueError, match="point"):
        pso_maximize(lambda v: np.nan, UNIT1, seed=0)


def test_pso_config_invariants():
    with pytest.raises(ValueError):
        PsoConfig(swarm_size=1)
    with pytest.raises(ValueError):
        PsoConfig(swarm_size=10, max_evals=5)


def test_alconfig_invariants():
    with pytest.raises(ValueError):
        ALConfig(n0=20, k=5, n_max=32)
    with pytest.raises(ValueError):
        ALConfig(n0=20, n_max=10)
    with pytest.raises(ValueError):
        ALConfig(model_kind="gp")
    assert ALConfig(n0=20, k=5, n_max=30).rounds == 2


def test_active_learn_pure_lhs_when_budget_is_n0():
    b = BoundsBox([0, 0], [1, 1])
    H = Counter(smooth_h)
    res = active_learn(H, b, ALConfig(n0=20, k=5, n_max=20, model_options={"trees": 5}), seed=0)
    assert len(res.dataset) == 20 and res.trace == [] and H.calls == 20


def test_active_learn_rounds_budget_and_order():
    b = BoundsBox([0, -1], [2, 1])
    H = Counter(smooth_h)
    cfg = ALConfig(n0=20, k=5, n_max=30, model_options={"trees": 10})
    res = active_learn(H, b, cfg, seed=3)
    assert H.calls == 30
    assert len(res.dataset) == 30 and len(res.trace) == 2
    assert b.contains(res.dataset.X)
    assert isinstance(res.model, ForestModel)
    # first n0 rows are the LHS design
    np.testing.assert_array_equal(res.dataset.X[:20],
                                  lhs_sample(b, 20, derive_seed(3, "al", "lhs")).points)
    np.testing.assert_array_equal(res.dataset.X[20:25], np.array(res.trace[0]["points"]))
    for entry in res.trace:
        assert len(set(entry["pso_seeds"])) == 5
        assert all(u >= 0 for u in entry["uncertainty"])
    all_seeds = [s for e in res.trace for s in e["pso_seeds"]]
    assert len(set(all_seeds)) == len(all_seeds)
    for i in range(30):
        np.testing.assert_array_equal(res.dataset.Y[i], smooth_h(res.dataset.X[i]))


def test_active_learn_deterministic(tmp_path):
    b = BoundsBox([0, 0], [1, 1])
    cfg = ALConfig(n0=10, k=2, n_max=14, model_options={"trees": 6})
    a = active_learn(smooth_h, b, cfg, seed=5)
    c = active_learn(smooth_h, b, cfg, seed=5)
    np.testing.assert_array_equal(a.dataset.X, c.dataset.X)
    a.write_trace(tmp_path / "trace.jsonl")
    lines = (tmp_path / "trace.jsonl").read_text().splitlines()
    assert len(lines) == 2 and json.loads(lines[0])["round"] == 1


def test_active_learn_zero_uncertainty_stub():
    b = BoundsBox([0, 0], [1, 1])
    res = active_learn(smooth_h, b, ALConfig(n0=4, k=2, n_max=8), seed=0,
                       train_model=lambda D, s: ZeroUncertainty())
    assert len(res.dataset) == 8 and b.contains(res.dataset.X)
    assert all(u == 0 for e in res.trace for u in e["uncertainty"])


def test_active_learn_deep_ensemble():
    b = BoundsBox([0, 0], [1, 1])
    cfg = ALConfig(n0=20, k=5, n_max=25, model_kind="deep_ensemble",
                   model_options={"epochs": 3, "members": 3})
    res = active_learn(smooth_h, b, cfg, seed=0)
    assert len(res.dataset) == 25 and res.model.member_count == 3


def test_bad_h_reports_index():
    b = BoundsBox([0, 0], [1, 1])

    def bad(x):
        return np.array([np.nan]) if x[0] > 0.5 else np.array([1.0])

    with pytest.raises(ValueError, match="sample"):
        active_learn(bad, b, ALConfig(n0=6, k=1, n_max=6, model_options={"trees": 2}), seed=0)
    with pytest.raises(ValueError, match="sample 1"):
        label_designs(lambda x: np.ones(int(x[0]) + 1), np.array([[0.0], [1.0]]))

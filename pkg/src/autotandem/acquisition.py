"""Uncertainty-driven batch acquisition.

Each round runs ``k`` independent particle-swarm searches for the design
that maximises the forward model's total predictive uncertainty, labels
the ``k`` winners with the high-fidelity function, and retrains the model
from scratch on the grown dataset.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .numcore import BoundsBox, LabeledDataset, derive_seed, make_rng
from .samplers import lhs_sample
from .surrogates import total_uncertainty, train_uncertainty_model

__all__ = ["PsoConfig", "PsoResult", "ALConfig", "ALResult", "pso_search", "pso_maximize",
           "label_designs", "active_learn"]


@dataclass(frozen=True)
class PsoConfig:
    swarm_size: int = 10
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    max_evals: int = 100

    def __post_init__(self):
        if self.swarm_size < 2:
            raise ValueError("swarm_size must be at least 2")
        if self.max_evals < self.swarm_size:
            raise ValueError("max_evals must be at least swarm_size")


@dataclass(frozen=True)
class PsoResult:
    x: np.ndarray
    value: float
    evaluations: int


def _evaluate(objective, X, vectorized):
    vals = (np.asarray(objective(X), dtype=float).reshape(-1) if vectorized
            else np.array([float(objective(x)) for x in X]))
    if vals.shape[0] != X.shape[0]:
        raise ValueError("objective returned the wrong number of values")
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        raise ValueError(f"objective returned {vals[i]} at point {X[i].tolist()}")
    return vals


def pso_search(objective: Callable, b: BoundsBox, cfg: PsoConfig = PsoConfig(), seed: int = 0,
               vectorized: bool = False) -> PsoResult:
    """Global-best particle swarm maximisation inside a box.

    Exactly ``cfg.max_evals`` objective evaluations are spent; the last
    generation is truncated if the budget does not divide evenly. Positions
    are clipped to the box and velocities to half its extent. With
    ``vectorized=True`` the objective receives a row matrix of designs.
    """
    rng = make_rng(seed, "pso")
    lo, hi, span = b.lower, b.upper, b.span
    vmax = 0.5 * span
    S, d = cfg.swarm_size, b.dim
    X = lo + rng.random((S, d)) * span
    V = rng.uniform(-1.0, 1.0, (S, d)) * vmax
    f = _evaluate(objective, X, vectorized)
    evals = S
    P, pf = X.copy(), f.copy()
    g = int(np.argmax(pf))
    while evals < cfg.max_evals:
        m = min(S, cfg.max_evals - evals)
        r1, r2 = rng.random((S, d)), rng.random((S, d))
        V = (cfg.inertia * V + cfg.cognitive * r1 * (P - X) + cfg.social * r2 * (P[g] - X))
        V = np.clip(V, -vmax, vmax)
        X = np.clip(X + V, lo, hi)
        f = _evaluate(objective, X[:m], vectorized)
        evals += m
        better = f > pf[:m]
        P[:m][better] = X[:m][better]
        pf[:m][better] = f[better]
        g = int(np.argmax(pf))
    return PsoResult(P[g].copy(), float(pf[g]), evals)


def pso_maximize(objective: Callable, b: BoundsBox, cfg: PsoConfig = PsoConfig(), seed: int = 0,
                 vectorized: bool = False) -> np.ndarray:
    return pso_search(objective, b, cfg, seed, vectorized).x


@dataclass(frozen=True)
class ALConfig:
    n0: int = 20
    k: int = 5
    n_max: int = 150
    pso: PsoConfig = PsoConfig()
    model_kind: str = "forest"
    model_options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n0 < 2 or self.k < 1 or self.n_max < self.n0:
            raise ValueError("need n0 >= 2, k >= 1 and n_max >= n0")
        if (self.n_max - self.n0) % self.k:
            raise ValueError(f"n_max - n0 = {self.n_max - self.n0} is not a multiple of k={self.k}")
        if self.model_kind not in ("forest", "deep_ensemble"):
            raise ValueError(f"unknown model kind {self.model_kind!r}")

    @property
    def rounds(self) -> int:
        return (self.n_max - self.n0) // self.k


@dataclass
class ALResult:
    dataset: LabeledDataset
    model: object
    trace: list = field(default_factory=list)

    def write_trace(self, path) -> None:
        with open(path, "w") as fh:
            for entry in self.trace:
                fh.write(json.dumps(entry) + "\n")


def label_designs(H: Callable, X: np.ndarray, start_index: int = 0, p: int | None = None):
    """Evaluate ``H`` on each row, checking response length and finiteness."""
    out = []
    for i, x in enumerate(X):
        y = np.asarray(H(x), dtype=float)
        idx = start_index + i
        if y.ndim != 1 or (p is not None and y.size != p):
            raise ValueError(f"H returned shape {y.shape} for sample {idx}, expected ({p},)")
        if not np.all(np.isfinite(y)):
            raise ValueError(f"H returned non-finite values for sample {idx}")
        p = y.size
        out.append(y)
    return np.array(out)


def active_learn(H: Callable, b: BoundsBox, cfg: ALConfig, seed: int = 0,
                 train_model: Callable | None = None) -> ALResult:
    """Grow a labelled dataset to ``cfg.n_max`` points by uncertainty sampling.

    The first ``n0`` rows are a Latin hypercube design; later rows follow in
    acquisition order. ``train_model(dataset, seed)`` overrides the
    forward-model factory (defaults to ``cfg.model_kind``).
    """
    if train_model is None:
        def train_model(D, s):
            return train_uncertainty_model(cfg.model_kind, D, s, **cfg.model_options)

    X = lhs_sample(b, cfg.n0, derive_seed(seed, "al", "lhs")).points
    Y = label_designs(H, X)
    p = Y.shape[1]
    model = train_model(LabeledDataset(X, Y), derive_seed(seed, "al", "model", 0))
    trace = []
    rnd = 0
    while X.shape[0] < cfg.n_max:
        rnd += 1
        seeds = [derive_seed(seed, "al", "pso", rnd, i) for i in range(cfg.k)]
        results = [pso_search(lambda Z: total_uncertainty(model, Z), b, cfg.pso, s,
                              vectorized=True) for s in seeds]
        batch = np.array([r.x for r in results])
        Yb = label_designs(H, batch, start_index=X.shape[0], p=p)
        X = np.vstack([X, batch])
        Y = np.vstack([Y, Yb])
        model = train_model(LabeledDataset(X, Y), derive_seed(seed, "al", "model", rnd))
        trace.append({"round": rnd, "points": batch.tolist(),
                      "uncertainty": [r.value for r in results],
                      "pso_seeds": seeds, "n_total": int(X.shape[0])})
    return ALResult(LabeledDataset(X, Y), model, trace)

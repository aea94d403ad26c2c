"""Forward models with predictive spread: deep ensembles and random forests.

Both model types expose ``member_predictions(X)`` returning an array of
shape ``(members, n, p)``. :func:`predict_mean_std` and
:func:`total_uncertainty` are written against that method only, so any
object providing it (for instance a stub in a test) can stand in.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .nn import MlpModel, MlpSpec, mlp_forward, mlp_from_dict, mlp_init, mlp_to_dict, mlp_train
from .numcore import (
    LabeledDataset, ScalerParams, derive_seed, make_rng, minmax_fit, minmax_transform,
)

__all__ = [
    "EnsembleModel", "RegressionTree", "ForestModel", "UncertaintyModel",
    "de_member_spec", "de_train", "build_tree", "forest_train",
    "predict_mean_std", "total_uncertainty", "train_uncertainty_model",
    "model_to_dict", "model_from_dict", "save_model", "load_model",
]

ENSEMBLE_FORMAT = "autotandem-ensemble"
FOREST_FORMAT = "autotandem-forest"
FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# Deep ensembles
# ---------------------------------------------------------------------------

@dataclass
class EnsembleModel:
    members: list
    scalers: list

    def __post_init__(self):
        if len(self.members) < 2:
            raise ValueError("an ensemble needs at least 2 members")
        if len(self.scalers) != len(self.members):
            raise ValueError("one input scaler per member is required")
        dims = {(m.spec.input_dim, m.spec.output_dim) for m in self.members}
        if len(dims) != 1:
            raise ValueError("ensemble members disagree on input/output sizes")

    @property
    def member_count(self) -> int:
        return len(self.members)

    @property
    def d(self) -> int:
        return self.members[0].spec.input_dim

    @property
    def p(self) -> int:
        return self.members[0].spec.output_dim

    def member_predictions(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.stack([mlp_forward(m, minmax_transform(X, s))
                         for m, s in zip(self.members, self.scalers)])


def de_member_spec(d: int, p: int, epochs: int = 200, **overrides) -> MlpSpec:
    """MLP settings for one ensemble member.

    Hidden widths (100, 200, 100), Adam at 1e-3, L2 1e-4, mini-batches of
    up to 200 rows, no validation split: training stops once the epoch loss
    has not improved by 1e-4 for 10 epochs.
    """
    base = dict(input_dim=d, output_dim=p, hidden=(100, 200, 100), learning_rate=1e-3,
                epochs=epochs, batch_size=200, val_fraction=0.0, patience=10, l2=1e-4,
                min_delta=1e-4)
    base.update(overrides)
    return MlpSpec(**base)


def de_train(D: LabeledDataset, members: int = 10, seed: int = 0, epochs: int = 200,
             **spec_overrides) -> EnsembleModel:
    """Train ``members`` independently seeded MLPs on the full dataset.

    Inputs are min-max scaled per member; outputs are left in raw units.
    A non-finite loss in any member aborts the whole ensemble.
    """
    if members < 2:
        raise ValueError("a deep ensemble needs at least 2 members")
    if len(D) < 10:
        raise ValueError(f"de_train needs at least 10 samples, got {len(D)}")
    spec = de_member_spec(D.d, D.p, epochs=epochs, **spec_overrides)
    nets, scalers = [], []
    for k in range(members):
        scaler = minmax_fit(D.X)
        Xs = minmax_transform(D.X, scaler)
        net = mlp_init(spec, derive_seed(seed, "de", k, "init"))
        nets.append(mlp_train(net, Xs, D.Y, loss="rmse", seed=derive_seed(seed, "de", k, "train")))
        scalers.append(scaler)
    return EnsembleModel(nets, scalers)


# ---------------------------------------------------------------------------
# Regression forests
# ---------------------------------------------------------------------------

@dataclass
class RegressionTree:
    """Axis-aligned binary tree stored as flat node arrays.

    Node ``k`` is a leaf when ``feature[k] == -1``; otherwise rows with
    ``x[feature[k]] <= threshold[k]`` go to ``left[k]`` and the rest to
    ``right[k]``. ``value[k]`` is the mean training response in the node.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                break
            go_left = X[rows, np.where(inner, f, 0)] <= self.threshold[node]
            nxt = np.where(go_left, self.left[node], self.right[node])
            node = np.where(inner, nxt, node)
        return self.value[node]

    def to_dict(self) -> dict:
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(),
                "p": int(self.value.shape[1]), "value": self.value.ravel().tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionTree":
        value = np.array(d["value"], dtype=float).reshape(-1, d["p"])
        return cls(np.array(d["feature"], dtype=np.int64), np.array(d["threshold"], dtype=float),
                   np.array(d["left"], dtype=np.int64), np.array(d["right"], dtype=np.int64), value)


def _best_split(X, Y, features):
    """Exhaustive variance-reduction split over midpoints of sorted values.

    Minimising the summed left/right squared error is the same as
    maximising ``|S_L|^2 / n_L + |S_R|^2 / n_R`` with ``S`` the column sums.
    Returns ``(feature, threshold)`` or None when no feature varies.
    """
    n = X.shape[0]
    total = Y.sum(axis=0)
    best_score = -np.inf
    best = None
    n_left = np.arange(1, n, dtype=float)
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        valid = xs[:-1] < xs[1:]
        if not valid.any():
            continue
        left = np.cumsum(Y[order], axis=0)[:-1]
        right = total - left
        score = (np.einsum("ij,ij->i", left, left) / n_left
                 + np.einsum("ij,ij->i", right, right) / (n - n_left))
        score = np.where(valid, score, -np.inf)
        k = int(np.argmax(score))
        if score[k] > best_score:
            best_score = score[k]
            thr = 0.5 * (xs[k] + xs[k + 1])
            if thr >= xs[k + 1]:  # midpoint rounded up onto the right value
                thr = xs[k]
            best = (int(f), float(thr))
    return best


def build_tree(X, Y, rng: np.random.Generator, max_features: int | None = None) -> RegressionTree:
    """Grow a tree until leaves are pure, hold one sample, or cannot be split."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    d = X.shape[1]
    m = d if max_features is None else max(1, min(d, int(max_features)))
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(Y[idx].mean(axis=0))
        return len(feature) - 1

    stack = [(new_node(np.arange(X.shape[0])), np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size < 2 or np.all(Y[idx] == Y[idx[0]]):
            continue
        features = rng.permutation(d)[:m]
        split = _best_split(X[idx], Y[idx], features)
        if split is None:
            continue
        f, thr = split
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri))
        stack.append((left[node], li))
    return RegressionTree(np.array(feature, dtype=np.int64), np.array(threshold),
                          np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                          np.array(value).reshape(len(value), Y.shape[1]))


@dataclass
class ForestModel:
    trees: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.trees) < 2:
            raise ValueError("a forest needs at least 2 trees")

    @property
    def tree_count(self) -> int:
        return len(self.trees)

    @property
    def d(self) -> int | None:
        return self.metadata.get("d")

    def member_predictions(self, X) -> np.ndarray:
        return np.stack([t.predict(X) for t in self.trees])


def forest_train(D: LabeledDataset, trees: int = 150, seed: int = 0, bootstrap: bool = True,
                 max_features: int | None = None) -> ForestModel:
    """Random forest of ``trees`` regression trees on bootstrap resamples.

    All features are considered at every node unless ``max_features`` is
    set. ``bootstrap=False`` fits every tree on the data as given.
    """
    if trees < 2:
        raise ValueError("a forest needs at least 2 trees")
    if len(D) < 1:
        raise ValueError("forest_train needs data")
    rng = make_rng(seed, "forest")
    n = len(D)
    out = []
    for _ in range(trees):
        idx = rng.integers(0, n, n) if bootstrap else np.arange(n)
        out.append(build_tree(D.X[idx], D.Y[idx], rng, max_features))
    return ForestModel(out, metadata={"d": D.d, "bootstrap": bootstrap,
                                      "max_features": max_features})


UncertaintyModel = Union[EnsembleModel, ForestModel]


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------

def _members(M, x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    d = getattr(M, "d", None)
    if d is not None and X.shape[1] != d:
        raise ValueError(f"expected design length {d}, got {X.shape[1]}")
    return M.member_predictions(X), single


def predict_mean_std(M, x):
    """Mean and population standard deviation over members, per output.

    ``x`` may be one design (returns two length-p vectors) or a row matrix
    (returns two ``n x p`` arrays).
    """
    P, single = _members(M, x)
    mean, std = P.mean(axis=0), P.std(axis=0)
    return (mean[0], std[0]) if single else (mean, std)


def total_uncertainty(M, x):
    """Sum of per-output standard deviations (a float, or one per row)."""
    _, std = predict_mean_std(M, x)
    return float(std.sum()) if std.ndim == 1 else std.sum(axis=1)


def train_uncertainty_model(kind: str, D: LabeledDataset, seed: int, **options):
    if kind == "forest":
        return forest_train(D, seed=seed, **options)
    if kind == "deep_ensemble":
        return de_train(D, seed=seed, **options)
    raise ValueError(f"unknown model kind {kind!r}")


# ---------------------------------------------------------------------------
# JSON persistence
# ---------------------------------------------------------------------------

def model_to_dict(M) -> dict:
    if isinstance(M, EnsembleModel):
        return {"format": ENSEMBLE_FORMAT, "version": FORMAT_VERSION,
                "members": [mlp_to_dict(m) for m in M.members],
                "scalers": [s.to_dict() for s in M.scalers]}
    if isinstance(M, ForestModel):
        return {"format": FOREST_FORMAT, "version": FORMAT_VERSION,
                "trees": [t.to_dict() for t in M.trees], "metadata": M.metadata}
    raise TypeError(f"cannot serialise {type(M).__name__}")


def model_from_dict(doc: dict):
    fmt = doc.get("format")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')!r}")
    if fmt == ENSEMBLE_FORMAT:
        return EnsembleModel([mlp_from_dict(m) for m in doc["members"]],
                             [ScalerParams.from_dict(s) for s in doc["scalers"]])
    if fmt == FOREST_FORMAT:
        return ForestModel([RegressionTree.from_dict(t) for t in doc["trees"]],
                           doc.get("metadata", {}))
    raise ValueError(f"unknown model format {fmt!r}")


def save_model(M, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(M)))


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text()))

"""Feed-forward ReLU networks trained with Adam, and tandem inverse models.

Weights are stored per layer as ``W`` with shape ``(fan_in, fan_out)`` and
``b`` with shape ``(fan_out,)``; a layer computes ``X @ W + b``. Hidden
layers apply ReLU, the output layer is linear.

A tandem model pairs a forward network (design -> response) with an inverse
network (response -> design). The inverse network is trained through the
frozen forward network: its loss is the RMSE between a target response and
the forward network's prediction at the proposed design, computed in
min-max scaled response units.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .numcore import (
    LabeledDataset, ScalerParams, derive_seed, make_rng, minmax_fit,
    minmax_inverse, minmax_transform,
)

__all__ = [
    "MlpSpec", "MlpModel", "TandemModel", "TrainingError",
    "DEFAULT_HIDDEN", "tandem_spec",
    "mlp_init", "mlp_forward", "loss_and_gradients", "mlp_train",
    "tandem_fit", "tandem_predict_design",
    "mlp_to_dict", "mlp_from_dict", "tandem_to_dict", "tandem_from_dict",
    "save_tandem", "load_tandem",
]

DEFAULT_HIDDEN = (64, 128, 256, 128, 64)
MLP_FORMAT = "autotandem-mlp"
TANDEM_FORMAT = "autotandem-tandem"
FORMAT_VERSION = 1

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class TrainingError(RuntimeError):
    """Raised when a training run produces a non-finite loss."""


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden: tuple = DEFAULT_HIDDEN
    output_dim: int = 1
    activation: str = "relu"
    learning_rate: float = 1e-3
    epochs: int = 2000
    batch_size: int = 32
    val_fraction: float = 0.1
    patience: int = 10
    l2: float = 0.0
    min_delta: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("input_dim and output_dim must be positive")
        if any(h < 1 for h in self.hidden):
            raise ValueError("hidden layer widths must be positive")
        if self.activation != "relu":
            raise ValueError(f"unsupported activation {self.activation!r}")
        if self.learning_rate <= 0 or self.epochs < 1 or self.batch_size < 1 or self.patience < 1:
            raise ValueError("learning_rate, epochs, batch_size and patience must be positive")
        # 0 disables the validation split; the training loss is monitored instead
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie in [0, 1)")
        if self.l2 < 0:
            raise ValueError("l2 must be nonnegative")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.input_dim, *self.hidden, self.output_dim]


def tandem_spec(**overrides) -> MlpSpec:
    """Network/training settings used for both halves of a tandem model.

    Dimensions are placeholders; :func:`tandem_fit` sets them from the data.
    """
    base = dict(input_dim=1, output_dim=1, hidden=DEFAULT_HIDDEN, learning_rate=1e-3,
                epochs=2000, batch_size=32, val_fraction=0.1, patience=10)
    base.update(overrides)
    return MlpSpec(**base)


@dataclass
class MlpModel:
    spec: MlpSpec
    weights: list
    biases: list
    loss_history: list = field(default_factory=list)
    best_epoch: int = 0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        sizes = self.spec.layer_sizes
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("number of layers does not match the MlpSpec")
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape != (sizes[i], sizes[i + 1]) or b.shape != (sizes[i + 1],):
                raise ValueError(f"layer {i} has shape {W.shape}/{b.shape}, "
                                 f"expected {(sizes[i], sizes[i + 1])}")

    def copy(self) -> "MlpModel":
        return MlpModel(self.spec, [W.copy() for W in self.weights],
                        [b.copy() for b in self.biases], list(self.loss_history),
                        self.best_epoch, dict(self.metadata))

    def __call__(self, X) -> np.ndarray:
        return mlp_forward(self, X)


def mlp_init(spec: MlpSpec, seed: int) -> MlpModel:
    """Glorot-uniform weights, zero biases, deterministic in ``seed``."""
    if len(spec.hidden) == 0:
        raise ValueError("an MLP needs at least one hidden layer")
    rng = make_rng(seed, "mlp_init")
    sizes = spec.layer_sizes
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        s = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-s, s, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(spec, weights, biases)


def _as_batch(X, dim: int) -> tuple[np.ndarray, bool]:
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != dim:
        raise ValueError(f"expected {dim} input columns, got shape {X.shape}")
    return X, single


def _forward_pass(weights, biases, X):
    """Return the list of layer inputs (post-activation) and the output."""
    acts = [X]
    h = X
    last = len(weights) - 1
    for i, (W, b) in enumerate(zip(weights, biases)):
        z = h @ W + b
        h = z if i == last else np.maximum(z, 0.0)
        acts.append(h)
    return acts


def _backward_pass(weights, acts, d_out, need_input_grad=False):
    """Backpropagate ``d_out`` (dL/d output). Returns (dWs, dbs, dX)."""
    n_layers = len(weights)
    dWs = [None] * n_layers
    dbs = [None] * n_layers
    delta = d_out
    for i in range(n_layers - 1, -1, -1):
        dWs[i] = acts[i].T @ delta
        dbs[i] = delta.sum(axis=0)
        if i > 0 or need_input_grad:
            delta = delta @ weights[i].T
            if i > 0:
                delta = delta * (acts[i] > 0)
    return dWs, dbs, (delta if need_input_grad else None)


def mlp_forward(m: MlpModel, X) -> np.ndarray:
    """ReLU hidden layers, linear output. Accepts a vector or a row matrix."""
    Xb, single = _as_batch(X, m.spec.input_dim)
    out = _forward_pass(m.weights, m.biases, Xb)[-1]
    return out[0] if single else out


def _rmse_and_grad(pred, target):
    err = pred - target
    loss = float(np.sqrt(np.mean(err * err)))
    if loss == 0.0:
        return 0.0, np.zeros_like(err)
    return loss, err / (err.size * loss)


def loss_and_gradients(m: MlpModel, X, Y, loss: str = "rmse",
                       frozen_forward: MlpModel | None = None, l2: float | None = None):
    """Objective value and parameter gradients for one batch.

    ``loss="rmse"`` compares ``m(X)`` with ``Y``. ``loss="tandem"`` compares
    ``frozen_forward(m(X))`` with ``X`` itself (``Y`` is ignored apart from
    its row count); gradients flow through the frozen network into ``m`` only.
    The L2 penalty ``0.5 * l2 * sum(W**2) / n`` is added when ``l2 > 0``.
    """
    l2 = m.spec.l2 if l2 is None else l2
    X = np.asarray(X, dtype=float)
    acts = _forward_pass(m.weights, m.biases, X)
    out = acts[-1]
    if loss == "rmse":
        value, d_out = _rmse_and_grad(out, np.asarray(Y, dtype=float))
    elif loss == "tandem":
        if frozen_forward is None:
            raise ValueError("tandem loss needs frozen_forward")
        f_acts = _forward_pass(frozen_forward.weights, frozen_forward.biases, out)
        value, d_recon = _rmse_and_grad(f_acts[-1], X)
        _, _, d_out = _backward_pass(frozen_forward.weights, f_acts, d_recon,
                                     need_input_grad=True)
    else:
        raise ValueError(f"unknown loss {loss!r}")
    dWs, dbs, _ = _backward_pass(m.weights, acts, d_out)
    if l2 > 0:
        n = X.shape[0]
        value += 0.5 * l2 * sum(float(np.vdot(W, W)) for W in m.weights) / n
        for dW, W in zip(dWs, m.weights):
            dW += (l2 / n) * W
    return value, dWs, dbs


def _data_loss(m, X, Y, loss, frozen_forward):
    out = mlp_forward(m, X)
    if loss == "tandem":
        return float(np.sqrt(np.mean((mlp_forward(frozen_forward, out) - X) ** 2)))
    return float(np.sqrt(np.mean((out - Y) ** 2)))


def mlp_train(m: MlpModel, X, Y, loss: str = "rmse", frozen_forward: MlpModel | None = None,
              seed: int = 0, validation: tuple | None = None) -> MlpModel:
    """Train a copy of ``m`` with Adam and early stopping; ``m`` is untouched.

    The rows are shuffled once with ``seed`` and the last ``val_fraction`` of
    them held out (pass ``validation=(Xv, Yv)`` to supply the hold-out set
    explicitly). Training stops after ``patience`` epochs without the
    monitored loss dropping below ``best - min_delta`` and the best weights
    are restored. With ``val_fraction == 0`` the epoch training loss is
    monitored. ``loss_history`` holds ``(train_loss, val_loss)`` per epoch,
    with ``val_loss`` set to None when there is no hold-out set.
    """
    spec = m.spec
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ValueError(f"X and Y must be 2-D with equal rows, got {X.shape} and {Y.shape}")
    if X.shape[1] != spec.input_dim:
        raise ValueError(f"X has {X.shape[1]} columns, model expects {spec.input_dim}")
    if loss == "tandem":
        if frozen_forward is None:
            raise ValueError("tandem loss needs frozen_forward")
        if (frozen_forward.spec.input_dim != spec.output_dim
                or frozen_forward.spec.output_dim != spec.input_dim):
            raise ValueError("frozen_forward dimensions are incompatible with the model")
    elif loss == "rmse":
        if Y.shape[1] != spec.output_dim:
            raise ValueError(f"Y has {Y.shape[1]} columns, model expects {spec.output_dim}")
    else:
        raise ValueError(f"unknown loss {loss!r}")

    rng = make_rng(seed, "mlp_train")
    n = X.shape[0]
    order = rng.permutation(n)
    if validation is not None:
        Xv, Yv = (np.asarray(a, dtype=float) for a in validation)
        train_idx = order
    else:
        n_val = 0
        if spec.val_fraction > 0:
            n_val = max(1, int(round(spec.val_fraction * n)))
        train_idx = order[: n - n_val]
        val_idx = order[n - n_val:]
        Xv, Yv = X[val_idx], Y[val_idx]
    if train_idx.size < 2:
        raise ValueError(f"need at least 2 training samples after the split, got {train_idx.size}")
    Xt, Yt = X[train_idx], Y[train_idx]
    has_val = Xv.shape[0] > 0
    batch = min(spec.batch_size, Xt.shape[0])

    model = m.copy()
    model.loss_history = []
    params = model.weights + model.biases
    m1 = [np.zeros_like(p) for p in params]
    m2 = [np.zeros_like(p) for p in params]
    step = 0
    best = np.inf
    best_params = [p.copy() for p in params]
    best_epoch = 0
    wait = 0

    for epoch in range(1, spec.epochs + 1):
        perm = rng.permutation(Xt.shape[0])
        batch_losses = []
        for start in range(0, perm.size, batch):
            idx = perm[start:start + batch]
            value, dWs, dbs = loss_and_gradients(model, Xt[idx], Yt[idx], loss, frozen_forward)
            if not np.isfinite(value):
                raise TrainingError(f"non-finite training loss at epoch {epoch}")
            batch_losses.append(value)
            step += 1
            lr_t = spec.learning_rate * np.sqrt(1 - ADAM_BETA2 ** step) / (1 - ADAM_BETA1 ** step)
            for p, g, a, v in zip(params, dWs + dbs, m1, m2):
                a *= ADAM_BETA1
                a += (1 - ADAM_BETA1) * g
                v *= ADAM_BETA2
                g *= g
                g *= 1 - ADAM_BETA2
                v += g
                np.sqrt(v, out=g)
                g += ADAM_EPS
                np.divide(a, g, out=g)
                g *= lr_t
                p -= g
        train_loss = float(np.mean(batch_losses))
        val_loss = _data_loss(model, Xv, Yv, loss, frozen_forward) if has_val else None
        if val_loss is not None and not np.isfinite(val_loss):
            raise TrainingError(f"non-finite validation loss at epoch {epoch}")
        model.loss_history.append((train_loss, val_loss))
        monitored = val_loss if has_val else train_loss
        if monitored < best - spec.min_delta:
            best = monitored
            best_params = [p.copy() for p in params]
            best_epoch = epoch
            wait = 0
        else:
            wait += 1
            if wait >= spec.patience:
                break

    k = len(model.weights)
    model.weights = best_params[:k]
    model.biases = best_params[k:]
    model.best_epoch = best_epoch
    model.metadata = dict(model.metadata, loss=loss, epochs_run=len(model.loss_history))
    return model


# ---------------------------------------------------------------------------
# Tandem models
# ---------------------------------------------------------------------------

@dataclass
class TandemModel:
    forward_net: MlpModel
    inverse_net: MlpModel
    x_scaler: ScalerParams
    y_scaler: ScalerParams
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        f, i = self.forward_net.spec, self.inverse_net.spec
        if f.input_dim != i.output_dim or f.output_dim != i.input_dim:
            raise ValueError("forward and inverse networks have incompatible dimensions")
        if self.x_scaler.dim != f.input_dim or self.y_scaler.dim != f.output_dim:
            raise ValueError("scaler dimensions do not match the networks")

    @property
    def d(self) -> int:
        return self.forward_net.spec.input_dim

    @property
    def p(self) -> int:
        return self.forward_net.spec.output_dim


def tandem_fit(D: LabeledDataset, spec: MlpSpec | None = None, seed: int = 0) -> TandemModel:
    """Fit the forward network on (x, y), then the inverse network on (y, x)
    through the frozen forward network, both in min-max scaled units."""
    if len(D) < 20:
        raise ValueError(f"tandem_fit needs at least 20 samples, got {len(D)}")
    spec = spec or tandem_spec()
    x_scaler = minmax_fit(D.X)
    y_scaler = minmax_fit(D.Y)
    Xs = minmax_transform(D.X, x_scaler)
    Ys = minmax_transform(D.Y, y_scaler)

    fspec = replace(spec, input_dim=D.d, output_dim=D.p)
    ispec = replace(spec, input_dim=D.p, output_dim=D.d)
    forward = mlp_train(mlp_init(fspec, derive_seed(seed, "forward", "init")), Xs, Ys,
                        loss="rmse", seed=derive_seed(seed, "forward", "train"))
    inverse = mlp_train(mlp_init(ispec, derive_seed(seed, "inverse", "init")), Ys, Xs,
                        loss="tandem", frozen_forward=forward,
                        seed=derive_seed(seed, "inverse", "train"))
    return TandemModel(forward, inverse, x_scaler, y_scaler,
                       metadata={"tandem_loss_space": "scaled", "seed": int(seed)})


def tandem_predict_design(t: TandemModel, y) -> np.ndarray:
    """Proposed design(s) for target response(s) ``y`` (vector or rows)."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != t.p:
        raise ValueError(f"target has length {y.shape[-1]}, model expects {t.p}")
    z = mlp_forward(t.inverse_net, minmax_transform(y, t.y_scaler))
    return minmax_inverse(z, t.x_scaler)


# ---------------------------------------------------------------------------
# JSON persistence
# ---------------------------------------------------------------------------

def mlp_to_dict(m: MlpModel) -> dict:
    """Versioned document; weights are flattened row-major (fan_in, fan_out)."""
    spec = asdict(m.spec)
    spec["hidden"] = list(spec["hidden"])
    return {
        "format": MLP_FORMAT,
        "version": FORMAT_VERSION,
        "spec": spec,
        "layers": [
            {"fan_in": int(W.shape[0]), "fan_out": int(W.shape[1]),
             "weights": W.ravel(order="C").tolist(), "bias": b.tolist()}
            for W, b in zip(m.weights, m.biases)
        ],
        "loss_history": [list(pair) for pair in m.loss_history],
        "best_epoch": m.best_epoch,
        "metadata": m.metadata,
    }


def _check_format(doc: dict, fmt: str):
    if doc.get("format") != fmt:
        raise ValueError(f"expected a {fmt!r} document, got {doc.get('format')!r}")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported {fmt} version {doc.get('version')!r}")


def mlp_from_dict(doc: dict) -> MlpModel:
    _check_format(doc, MLP_FORMAT)
    spec = MlpSpec(**doc["spec"])
    weights = [np.array(L["weights"], dtype=float).reshape(L["fan_in"], L["fan_out"])
               for L in doc["layers"]]
    biases = [np.array(L["bias"], dtype=float) for L in doc["layers"]]
    return MlpModel(spec, weights, biases, [tuple(p) for p in doc.get("loss_history", [])],
                    doc.get("best_epoch", 0), doc.get("metadata", {}))


def tandem_to_dict(t: TandemModel) -> dict:
    return {
        "format": TANDEM_FORMAT,
        "version": FORMAT_VERSION,
        "forward": mlp_to_dict(t.forward_net),
        "inverse": mlp_to_dict(t.inverse_net),
        "x_scaler": t.x_scaler.to_dict(),
        "y_scaler": t.y_scaler.to_dict(),
        "metadata": t.metadata,
    }


def tandem_from_dict(doc: dict) -> TandemModel:
    _check_format(doc, TANDEM_FORMAT)
    return TandemModel(mlp_from_dict(doc["forward"]), mlp_from_dict(doc["inverse"]),
                       ScalerParams.from_dict(doc["x_scaler"]),
                       ScalerParams.from_dict(doc["y_scaler"]), doc.get("metadata", {}))


def save_tandem(t: TandemModel, path) -> None:
    Path(path).write_text(json.dumps(tandem_to_dict(t)))


def load_tandem(path) -> TandemModel:
    return tandem_from_dict(json.loads(Path(path).read_text()))

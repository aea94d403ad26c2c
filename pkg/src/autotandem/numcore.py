"""Numeric primitives shared by every other module.

Seeded random streams, min-max scaling, the multi-output regression
metrics (RMSE, R2, NMAE) and descriptive statistics.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BoundsBox",
    "ScalerParams",
    "MetricsReport",
    "SummaryStats",
    "LabeledDataset",
    "derive_seed",
    "make_rng",
    "minmax_fit",
    "minmax_transform",
    "minmax_inverse",
    "rmse",
    "r2",
    "nmae",
    "compute_metrics",
    "summarize",
    "array_sha256",
]


# ---------------------------------------------------------------------------
# Random streams
# ---------------------------------------------------------------------------

def derive_seed(base: int, *labels) -> int:
    """Derive a child seed from ``base`` and a path of labels.

    The mapping is a SHA-256 digest of the textual path, so it is identical
    on every platform and Python version. Distinct label paths give
    independent 64-bit seeds.
    """
    path = "/".join([str(int(base))] + [str(lab) for lab in labels])
    digest = hashlib.sha256(path.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(seed: int, *labels) -> np.random.Generator:
    """PCG64 generator for ``derive_seed(seed, *labels)`` (or ``seed`` itself)."""
    s = derive_seed(seed, *labels) if labels else int(seed)
    return np.random.Generator(np.random.PCG64(s))


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundsBox:
    lower: np.ndarray
    upper: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).ravel()
        hi = np.asarray(self.upper, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise ValueError("lower and upper bounds differ in length")
        if lo.size == 0:
            raise ValueError("bounds must have at least one dimension")
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        names = tuple(self.names) if self.names else tuple(f"x{i}" for i in range(lo.size))
        if len(names) != lo.size:
            raise ValueError("names must match the number of dimensions")
        object.__setattr__(self, "names", names)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, X) -> bool:
        X = np.atleast_2d(X)
        return bool(np.all(X >= self.lower) and np.all(X <= self.upper))

    def clip(self, X) -> np.ndarray:
        return np.clip(X, self.lower, self.upper)

    def to_unit(self, X) -> np.ndarray:
        """Map into [0, 1]^d; degenerate dimensions map to 0."""
        span = self.span
        safe = np.where(span > 0, span, 1.0)
        return np.where(span > 0, (np.asarray(X, dtype=float) - self.lower) / safe, 0.0)

    def from_unit(self, U) -> np.ndarray:
        return self.lower + np.asarray(U, dtype=float) * self.span


@dataclass(frozen=True)
class ScalerParams:
    col_min: np.ndarray
    col_max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.col_min, dtype=float).ravel()
        hi = np.asarray(self.col_max, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise ValueError("col_min and col_max differ in length")
        if np.any(lo > hi):
            raise ValueError("col_min exceeds col_max")
        object.__setattr__(self, "col_min", lo)
        object.__setattr__(self, "col_max", hi)

    @property
    def dim(self) -> int:
        return self.col_min.size

    def to_dict(self) -> dict:
        return {"col_min": self.col_min.tolist(), "col_max": self.col_max.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerParams":
        return cls(np.array(d["col_min"], dtype=float), np.array(d["col_max"], dtype=float))


@dataclass(frozen=True)
class MetricsReport:
    rmse: float
    r2: float
    nmae: float

    def __post_init__(self):
        if self.rmse < 0 or self.nmae < 0:
            raise ValueError("rmse and nmae must be nonnegative")

    def to_dict(self) -> dict:
        return {"rmse": float(self.rmse), "r2": float(self.r2), "nmae": float(self.nmae)}

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite([self.rmse, self.r2, self.nmae])))


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    std: float
    max: float
    min: float

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std": self.std, "max": self.max, "min": self.min}


@dataclass
class LabeledDataset:
    """Design vectors ``X`` (n x d) paired with responses ``Y`` (n x p)."""

    X: np.ndarray
    Y: np.ndarray
    x_scaler: ScalerParams | None = field(default=None, repr=False)
    y_scaler: ScalerParams | None = field(default=None, repr=False)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        if self.X.shape[0] != self.Y.shape[0]:
            raise ValueError(
                f"X has {self.X.shape[0]} rows but Y has {self.Y.shape[0]}")

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def p(self) -> int:
        return self.Y.shape[1]

    def fit_scalers(self) -> "LabeledDataset":
        self.x_scaler = minmax_fit(self.X)
        self.y_scaler = minmax_fit(self.Y)
        return self

    def sha256(self) -> str:
        return array_sha256(self.X, self.Y)


def array_sha256(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(np.asarray(a, dtype="<f8"))
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Min-max scaling
# ---------------------------------------------------------------------------

def minmax_fit(data) -> ScalerParams:
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] == 0:
        raise ValueError("minmax_fit needs a non-empty 2-D array")
    return ScalerParams(data.min(axis=0), data.max(axis=0))


def _check_dim(x: np.ndarray, s: ScalerParams):
    if x.shape[-1] != s.dim:
        raise ValueError(f"expected trailing dimension {s.dim}, got {x.shape[-1]}")


def minmax_transform(x, s: ScalerParams) -> np.ndarray:
    """Affine map sending ``col_min`` to 0 and ``col_max`` to 1.

    Works on a single vector or on the rows of a matrix. Constant columns
    (``col_min == col_max``) map to 0.
    """
    x = np.asarray(x, dtype=float)
    _check_dim(x, s)
    span = s.col_max - s.col_min
    degenerate = span == 0
    safe = np.where(degenerate, 1.0, span)
    return np.where(degenerate, 0.0, (x - s.col_min) / safe)


def minmax_inverse(z, s: ScalerParams) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    _check_dim(z, s)
    return s.col_min + z * (s.col_max - s.col_min)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def _pair(Y, Yhat):
    Y = np.asarray(Y, dtype=float)
    Yhat = np.asarray(Yhat, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Yhat.ndim == 1:
        Yhat = Yhat[:, None]
    if Y.shape != Yhat.shape:
        raise ValueError(f"shape mismatch: {Y.shape} vs {Yhat.shape}")
    if Y.size == 0:
        raise ValueError("metrics need at least one sample and one output")
    return Y, Yhat


def rmse(Y, Yhat) -> float:
    """Root mean squared error pooled over all n*p entries."""
    Y, Yhat = _pair(Y, Yhat)
    return float(np.sqrt(np.mean((Y - Yhat) ** 2)))


def r2(Y, Yhat) -> float:
    """Multi-output R2 with residual and total sums pooled over columns."""
    Y, Yhat = _pair(Y, Yhat)
    ss_tot = np.sum((Y - Y.mean(axis=0)) ** 2)
    if ss_tot == 0:
        raise ValueError("r2 undefined: every output column is constant")
    ss_res = np.sum((Y - Yhat) ** 2)
    return float(1.0 - ss_res / ss_tot)


def nmae(Y, Yhat) -> float:
    """Column-averaged max absolute error over max deviation from the column mean."""
    Y, Yhat = _pair(Y, Yhat)
    denom = np.max(np.abs(Y - Y.mean(axis=0)), axis=0)
    if np.any(denom == 0):
        bad = np.flatnonzero(denom == 0).tolist()
        raise ValueError(f"nmae undefined: zero-deviation output columns {bad}")
    num = np.max(np.abs(Y - Yhat), axis=0)
    return float(np.mean(num / denom))


def compute_metrics(Y, Yhat) -> MetricsReport:
    return MetricsReport(rmse=rmse(Y, Yhat), r2=r2(Y, Yhat), nmae=nmae(Y, Yhat))


# ---------------------------------------------------------------------------
# Descriptive statistics
# ---------------------------------------------------------------------------

def summarize(values) -> SummaryStats:
    """Mean, population standard deviation, max and min of ``values``."""
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        raise ValueError("cannot summarize an empty list")
    mean = float(np.mean(v))
    # clamp so float rounding never puts the mean outside [min, max]
    mean = min(max(mean, float(v.min())), float(v.max()))
    return SummaryStats(mean=mean, std=float(np.std(v)), max=float(v.max()), min=float(v.min()))

"""Built-in high-fidelity problems and test-set generation.

``sbr`` recovers 20 Dirichlet values on the top edge of a unit square from
30 interior measurements of a transient diffusion field. ``aidlike`` and
``psidlike`` are smooth analytic maps with the input/output sizes and
parameter ranges of the airfoil and photonic-surface problems.

Field arrays are indexed ``field[iy, ix]`` with ``iy = 0`` the bottom row
and ``ix = 0`` the left column. Cell centres sit at ``(i + 0.5) * h``.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .numcore import BoundsBox, make_rng

__all__ = [
    "BenchmarkProblem", "DiffusionGrid", "TestSet", "ConfigurationError",
    "MEASUREMENT_POINTS", "DEFAULT_GRID",
    "sbr_solve", "sbr_measure", "sbr_problem", "aidlike_problem", "psidlike_problem",
    "make_test_set", "PROBLEMS", "get_problem",
]


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class BenchmarkProblem:
    """A forward map ``R^d -> R^p`` on a box, queried for training labels.

    ``func`` maps one design vector to one response vector. ``batch_func``,
    when given, maps a row matrix to a row matrix and must agree with
    ``func`` row by row.
    """

    name: str
    d: int
    p: int
    bounds: BoundsBox
    func: Callable[[np.ndarray], np.ndarray]
    batch_func: Callable[[np.ndarray], np.ndarray] | None = None
    output_names: tuple = ()
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.bounds.dim != self.d:
            raise ValueError(f"bounds have {self.bounds.dim} dimensions, problem has d={self.d}")
        if not self.output_names:
            object.__setattr__(self, "output_names", tuple(f"y{j}" for j in range(self.p)))

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise ValueError(f"{self.name}: expected a design of length {self.d}, got {x.shape}")
        y = np.asarray(self.func(x), dtype=float)
        if y.shape != (self.p,):
            raise ValueError(f"{self.name}: response has shape {y.shape}, expected ({self.p},)")
        return y

    def evaluate_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise ValueError(f"{self.name}: expected {self.d} columns, got {X.shape[1]}")
        if self.batch_func is not None:
            Y = np.asarray(self.batch_func(X), dtype=float)
            if Y.shape != (X.shape[0], self.p):
                raise ValueError(f"{self.name}: batch response has shape {Y.shape}")
            return Y
        return np.array([self.evaluate(x) for x in X]).reshape(X.shape[0], self.p)

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x)


# ---------------------------------------------------------------------------
# Scalar boundary reconstruction
# ---------------------------------------------------------------------------

_MEAS_X = (0.1, 0.3, 0.5, 0.7, 0.9)
_MEAS_Y = (0.15, 0.3, 0.45, 0.6, 0.75, 0.9)
# 30 sensor locations (x, y), ordered by row (y) then column (x)
MEASUREMENT_POINTS = np.array([(x, y) for y in _MEAS_Y for x in _MEAS_X])


@dataclass(frozen=True)
class DiffusionGrid:
    nx: int = 20
    ny: int = 20
    diffusivity: float = 1.0
    t_max: float = 0.1
    dt: float = 1e-4
    measurement_points: np.ndarray = field(default_factory=lambda: MEASUREMENT_POINTS.copy())

    def __post_init__(self):
        if self.nx != self.ny:
            raise ConfigurationError("the solver assumes square cells (nx == ny)")
        if self.dt <= 0 or self.t_max <= 0 or self.diffusivity <= 0:
            raise ConfigurationError("dt, t_max and diffusivity must be positive")
        limit = 0.5 * self.h ** 2 / (4 * self.diffusivity)
        if self.dt > limit:
            raise ConfigurationError(
                f"dt={self.dt:g} exceeds the explicit stability bound {limit:g}")

    @property
    def h(self) -> float:
        return 1.0 / self.nx

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.t_max / self.dt - 1e-9))

    def cell_centers(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.h


DEFAULT_GRID = DiffusionGrid()


def sbr_solve(bc_top, grid: DiffusionGrid = DEFAULT_GRID) -> np.ndarray:
    """Explicit finite-volume integration of dc/dt = D lap(c) from c = 0.

    The top face holds ``c = bc_top`` (one value per top cell, imposed on the
    face half a cell above the centre); the other three sides have zero
    flux. Accepts one boundary vector (returns ``ny x nx``) or a row matrix
    of them (returns ``n x ny x nx``).
    """
    bc = np.asarray(bc_top, dtype=float)
    single = bc.ndim == 1
    bc = np.atleast_2d(bc)
    if bc.shape[1] != grid.nx:
        raise ValueError(f"expected {grid.nx} boundary values, got {bc.shape[1]}")
    if not np.all(np.isfinite(bc)):
        raise ValueError("boundary values must be finite")

    steps = grid.n_steps
    r = grid.diffusivity * (grid.t_max / steps) / grid.h ** 2
    c = np.zeros((bc.shape[0], grid.ny, grid.nx))
    flux = np.empty_like(c)
    for _ in range(steps):
        flux.fill(0.0)
        dy = c[:, 1:, :] - c[:, :-1, :]
        flux[:, :-1, :] += dy
        flux[:, 1:, :] -= dy
        dx = c[:, :, 1:] - c[:, :, :-1]
        flux[:, :, :-1] += dx
        flux[:, :, 1:] -= dx
        flux[:, -1, :] += 2.0 * (bc - c[:, -1, :])
        c += r * flux
    return c[0] if single else c


def sbr_measure(fld, points=MEASUREMENT_POINTS) -> np.ndarray:
    """Bilinear interpolation of a cell-centred field at ``points``.

    Points must lie within the hull of the cell centres. Works on one field
    or a stack of fields.
    """
    f = np.asarray(fld, dtype=float)
    ny, nx = f.shape[-2:]
    hx, hy = 1.0 / nx, 1.0 / ny
    pts = np.asarray(points, dtype=float)
    fx = pts[:, 0] / hx - 0.5
    fy = pts[:, 1] / hy - 0.5
    if np.any(fx < 0) or np.any(fx > nx - 1) or np.any(fy < 0) or np.any(fy > ny - 1):
        raise ValueError("measurement points must lie between the outermost cell centres")
    i0 = np.clip(np.floor(fx).astype(int), 0, nx - 2)
    j0 = np.clip(np.floor(fy).astype(int), 0, ny - 2)
    tx = fx - i0
    ty = fy - j0
    return ((1 - tx) * (1 - ty) * f[..., j0, i0] + tx * (1 - ty) * f[..., j0, i0 + 1]
            + (1 - tx) * ty * f[..., j0 + 1, i0] + tx * ty * f[..., j0 + 1, i0 + 1])


def sbr_problem(grid: DiffusionGrid = DEFAULT_GRID) -> BenchmarkProblem:
    bounds = BoundsBox(np.zeros(grid.nx), np.full(grid.nx, 30.0),
                       names=tuple(f"c_bc{i + 1}" for i in range(grid.nx)))
    pts = grid.measurement_points

    # The field is linear in the boundary vector (zero initial state), so the
    # measurements are a fixed 20 x 30 response matrix applied to bc. The
    # broadcast sum keeps each row bit-identical however the batch is sliced.
    response = []

    def batch(X):
        if not response:
            response.append(sbr_measure(sbr_solve(np.eye(grid.nx), grid), pts))
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if not np.all(np.isfinite(X)):
            raise ValueError("boundary values must be finite")
        return (X[:, :, None] * response[0][None, :, :]).sum(axis=1)

    def func(x):
        return batch(np.asarray(x, dtype=float)[None, :])[0]

    return BenchmarkProblem(
        "sbr", grid.nx, len(pts), bounds, func, batch,
        output_names=tuple(f"c{j + 1}" for j in range(len(pts))),
        metadata={"initial_condition": "zero", "dt": grid.dt, "t_max": grid.t_max,
                  "dirichlet": "face value", "evaluation": "superposition", "measurement_points": pts.tolist()},
    )


# ---------------------------------------------------------------------------
# Analytic stand-ins
# ---------------------------------------------------------------------------

AID_BOUNDS = BoundsBox([0.02, 0.2, 0.06, 4e6, 0.0], [0.09, 0.7, 0.15, 6e6, 7.0],
                       names=("m", "p", "t", "Re", "alpha"))
PSID_BOUNDS = BoundsBox([0.2, 10.0, 0.02], [1.3, 700.0, 28.0], names=("Lp", "Ss", "Sp"))
_AID_S = np.arange(75) / 74.0
_PSID_W = np.arange(822) / 821.0


def _aid_curve(X):
    U = AID_BOUNDS.to_unit(np.atleast_2d(X))
    u1, u2, u3, u4, u5 = (U[:, k:k + 1] for k in range(5))
    s = _AID_S[None, :]
    return (u1 * np.sin(2 * np.pi * u2 * s) * np.exp(-3 * u3 * s)
            + 0.5 * u4 * (1 - s) ** 2 + u5 * s)


def _psid_curve(X):
    U = PSID_BOUNDS.to_unit(np.atleast_2d(X))
    u1, u2, u3 = (U[:, k:k + 1] for k in range(3))
    w = _PSID_W[None, :]
    sig = 1.0 / (1.0 + np.exp(-4.0 * (u1 - w)))
    return sig * (0.3 + 0.6 * u2 * np.exp(-((w - u3) ** 2) / 0.05))


def aidlike_problem() -> BenchmarkProblem:
    return BenchmarkProblem("aidlike", 5, 75, AID_BOUNDS, lambda x: _aid_curve(x)[0],
                            _aid_curve, output_names=tuple(f"cp{j}" for j in range(75)))


def psidlike_problem() -> BenchmarkProblem:
    return BenchmarkProblem("psidlike", 3, 822, PSID_BOUNDS, lambda x: _psid_curve(x)[0],
                            _psid_curve, output_names=tuple(f"eps{j}" for j in range(822)))


PROBLEMS = {"sbr": sbr_problem, "aidlike": aidlike_problem, "psidlike": psidlike_problem}


def get_problem(name: str) -> BenchmarkProblem:
    try:
        return PROBLEMS[name.lower()]()
    except KeyError:
        raise ValueError(f"unknown benchmark {name!r}; choose from {sorted(PROBLEMS)}") from None


# ---------------------------------------------------------------------------
# Test sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestSet:
    Tx: np.ndarray
    Ty: np.ndarray

    __test__ = False  # not a pytest class

    def __len__(self) -> int:
        return self.Tx.shape[0]

    def save(self, directory, x_names=None, y_names=None) -> dict:
        """Write ``Tx.csv`` and ``Ty.csv``; return their SHA-256 digests."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        digests = {}
        for fname, arr, names in (("Tx.csv", self.Tx, x_names), ("Ty.csv", self.Ty, y_names)):
            names = names or [f"c{j}" for j in range(arr.shape[1])]
            path = directory / fname
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(names)
                for row in arr:
                    w.writerow([repr(float(v)) for v in row])
            digests[fname] = hashlib.sha256(path.read_bytes()).hexdigest()
        return digests

    @classmethod
    def load(cls, directory) -> "TestSet":
        directory = Path(directory)
        arrs = []
        for fname in ("Tx.csv", "Ty.csv"):
            with open(directory / fname, newline="") as fh:
                rows = list(csv.reader(fh))[1:]
            arrs.append(np.array(rows, dtype=float))
        return cls(*arrs)


def make_test_set(prob: BenchmarkProblem, n: int = 1000, seed: int = 0) -> TestSet:
    """Uniform random designs in the box, labelled through ``prob``."""
    if n < 1:
        raise ValueError("need n >= 1")
    rng = make_rng(seed, "testset", prob.name)
    Tx = prob.bounds.from_unit(rng.random((n, prob.d)))
    return TestSet(Tx, prob.evaluate_many(Tx))

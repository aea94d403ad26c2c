"""Shared synthetic problems for tests."""

import numpy as np

from autotandem.benchmarks import BenchmarkProblem
from autotandem.numcore import BoundsBox


def affine_problem(d=4, p=6, seed=0):
    """Injective affine map x -> A x + c on [0, 1]^d with well-conditioned A."""
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(p, p)))
    R, _ = np.linalg.qr(rng.normal(size=(d, d)))
    s = np.linspace(2.0, 1.0, d)
    A = Q[:, :d] @ np.diag(s) @ R  # p x d, singular values in [1, 2]
    c = rng.normal(size=p)

    def f(x):
        return A @ np.asarray(x, dtype=float) + c

    return BenchmarkProblem("affine", d, p, BoundsBox(np.zeros(d), np.ones(d)), f,
                            batch_func=lambda X: np.asarray(X) @ A.T + c), A, c

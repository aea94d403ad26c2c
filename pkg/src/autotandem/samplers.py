"""Space-filling baselines: random, Latin hypercube, GreedyFP and Best Candidate.

GreedyFP and Best Candidate grow a design one point at a time. Each
iteration draws a pool of uniform candidates and keeps the one whose
nearest already-selected point is farthest away. GreedyFP uses a fixed pool
size; Best Candidate grows the pool linearly with the iteration number.
Distances are measured after mapping the box onto the unit cube so that
dimensions with large physical ranges do not dominate.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist

from .numcore import BoundsBox, make_rng

__all__ = [
    "SampleBatch", "random_sample", "lhs_sample", "greedyfp_sample",
    "bestcandidate_sample", "SAMPLERS", "get_sampler",
]

GFP_CANDIDATES = 100
BC_BASE = 10

# (iteration, candidate_count) -> candidates in problem units, shape (m, d)
CandidateHook = Callable[[int, int], np.ndarray]


@dataclass(frozen=True)
class SampleBatch:
    points: np.ndarray
    bounds: BoundsBox

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[1] != self.bounds.dim:
            raise ValueError("points do not match the bounds dimension")
        if not self.bounds.contains(pts):
            raise ValueError("sample batch contains points outside the bounds")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.bounds.names)
            for row in self.points:
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path, bounds: BoundsBox) -> "SampleBatch":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if tuple(rows[0]) != tuple(bounds.names):
            raise ValueError(f"CSV header {rows[0]} does not match {list(bounds.names)}")
        return cls(np.array(rows[1:], dtype=float), bounds)


def _check_n(n: int):
    if n < 1:
        raise ValueError("need n >= 1")


def random_sample(b: BoundsBox, n: int, seed: int) -> SampleBatch:
    _check_n(n)
    rng = make_rng(seed, "random")
    return SampleBatch(b.from_unit(rng.random((n, b.dim))), b)


def lhs_sample(b: BoundsBox, n: int, seed: int) -> SampleBatch:
    """One point per stratum ``[k/n, (k+1)/n)`` in every dimension."""
    _check_n(n)
    rng = make_rng(seed, "lhs")
    U = np.empty((n, b.dim))
    for j in range(b.dim):
        U[:, j] = (rng.permutation(n) + rng.random(n)) / n
    return SampleBatch(b.clip(b.from_unit(U)), b)


def _farthest_point(b: BoundsBox, n: int, seed: int, count_for: Callable[[int], int],
                    tag: str, candidate_hook: CandidateHook | None) -> SampleBatch:
    _check_n(n)
    rng = make_rng(seed, tag)
    chosen_unit = np.empty((n, b.dim))
    chosen = np.empty((n, b.dim))
    for i in range(n):
        count = 1 if i == 0 else count_for(i)
        if candidate_hook is not None:
            cand = np.atleast_2d(np.asarray(candidate_hook(i, count), dtype=float))
        else:
            cand = b.from_unit(rng.random((count, b.dim)))
        cand_unit = b.to_unit(cand)
        if i == 0:
            k = 0
        else:
            nearest = cdist(cand_unit, chosen_unit[:i]).min(axis=1)
            k = int(np.argmax(nearest))
        chosen_unit[i] = cand_unit[k]
        chosen[i] = cand[k]
    return SampleBatch(chosen, b)


def greedyfp_sample(b: BoundsBox, n: int, seed: int, candidates_per_iter: int = GFP_CANDIDATES,
                    candidate_hook: CandidateHook | None = None) -> SampleBatch:
    """Farthest-point sampling with a constant candidate pool per iteration.

    ``candidate_hook(i, count)`` replaces the random pool at iteration ``i``
    (iteration 0 keeps the first candidate it is given).
    """
    if candidates_per_iter < 1:
        raise ValueError("candidates_per_iter must be positive")
    return _farthest_point(b, n, seed, lambda i: candidates_per_iter, "greedyfp", candidate_hook)


def bestcandidate_sample(b: BoundsBox, n: int, seed: int, base: int = BC_BASE,
                         candidate_hook: CandidateHook | None = None) -> SampleBatch:
    """Mitchell's best-candidate sampling: ``base * i`` candidates at iteration ``i``."""
    if base < 1:
        raise ValueError("base must be positive")
    return _farthest_point(b, n, seed, lambda i: base * i, "bestcandidate", candidate_hook)


SAMPLERS = {
    "random": random_sample,
    "lhs": lhs_sample,
    "gfp": greedyfp_sample,
    "bc": bestcandidate_sample,
}


def get_sampler(name: str):
    try:
        return SAMPLERS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown sampler {name!r}; choose from {sorted(SAMPLERS)}") from None

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.distance import pdist

from autotandem.numcore import BoundsBox
from autotandem.samplers import (
    SampleBatch, bestcandidate_sample, get_sampler, greedyfp_sample, lhs_sample, random_sample,
)

UNIT1 = BoundsBox([0.0], [1.0])
UNIT2 = BoundsBox([0.0, 0.0], [1.0, 1.0])


def strata_ok(batch: SampleBatch) -> bool:
    n = len(batch)
    U = batch.bounds.to_unit(batch.points)
    for j in range(U.shape[1]):
        k = np.minimum(np.floor(U[:, j] * n).astype(int), n - 1)
        if sorted(k.tolist()) != list(range(n)):
            return False
    return True


def test_random_mean_and_determinism():
    pts = random_sample(UNIT2, 1000, seed=0).points
    assert np.all(np.abs(pts.mean(axis=0) - 0.5) < 0.05)
    np.testing.assert_array_equal(pts, random_sample(UNIT2, 1000, seed=0).points)


def test_random_degenerate_bounds():
    b = BoundsBox([2.0, 3.0], [2.0, 3.0])
    assert np.all(random_sample(b, 5, 1).points == [2.0, 3.0])


def test_lhs_four_points():
    pts = lhs_sample(UNIT1, 4, seed=3).points[:, 0]
    assert sorted(np.floor(pts * 4).astype(int).tolist()) == [0, 1, 2, 3]


def test_lhs_single_point():
    b = lhs_sample(UNIT2, 1, seed=0)
    assert len(b) == 1 and UNIT2.contains(b.points)


@pytest.mark.parametrize("n", [1, 4, 20, 400])
@pytest.mark.parametrize("d", [1, 3, 20])
def test_lhs_stratification(n, d):
    b = BoundsBox(np.linspace(-5, 0, d), np.linspace(1, 1e6, d))
    batch = lhs_sample(b, n, seed=n * 31 + d)
    assert batch.points.shape == (n, d)
    assert strata_ok(batch)
    assert b.contains(batch.points)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 60), st.integers(1, 6), st.integers(0, 2**32))
def test_lhs_stratification_property(n, d, seed):
    assert strata_ok(lhs_sample(BoundsBox(np.zeros(d), np.ones(d)), n, seed))


def test_gfp_picks_farthest_injected():
    pools = {0: [[0.0]], 1: [[0.2], [0.9], [0.5]]}
    batch = greedyfp_sample(UNIT1, 2, seed=0, candidate_hook=lambda i, c: pools[i])
    np.testing.assert_array_equal(batch.points[:, 0], [0.0, 0.9])


def test_gfp_argmax_contract_two_dims():
    rng = np.random.default_rng(4)
    pools = {0: rng.random((1, 2)), 1: rng.random((100, 2))}
    batch = greedyfp_sample(UNIT2, 2, seed=0, candidate_hook=lambda i, c: pools[i])
    first, second = batch.points
    dists = np.linalg.norm(pools[1] - first, axis=1)
    assert np.linalg.norm(second - first) == dists.max()


def test_bc_candidate_schedule():
    counts = []
    rng = np.random.default_rng(0)

    def hook(i, count):
        counts.append(count)
        return rng.random((count, 2))

    bestcandidate_sample(UNIT2, 5, seed=0, base=10, candidate_hook=hook)
    assert counts == [1, 10, 20, 30, 40]


def test_gfp_candidate_count_constant():
    counts = []
    greedyfp_sample(UNIT2, 4, seed=0, candidates_per_iter=100,
                    candidate_hook=lambda i, c: counts.append(c) or np.random.rand(c, 2))
    assert counts == [1, 100, 100, 100]


@pytest.mark.parametrize("sampler", [greedyfp_sample, bestcandidate_sample])
def test_farthest_contract_every_iteration(sampler):
    """Each selected point attains the max nearest-distance of its own pool."""
    rng = np.random.default_rng(1)
    b = BoundsBox([0.0, -10.0, 1e5], [1.0, 10.0, 2e5])
    pools = {}

    def hook(i, count):
        pools[i] = b.from_unit(rng.random((count, 3)))
        return pools[i]

    batch = sampler(b, 12, seed=0, candidate_hook=hook)
    U = b.to_unit(batch.points)
    for i in range(1, 12):
        cu = b.to_unit(pools[i])
        nearest = np.min(np.linalg.norm(cu[:, None, :] - U[None, :i, :], axis=2), axis=1)
        got = np.min(np.linalg.norm(U[i] - U[:i], axis=1))
        assert got == pytest.approx(nearest.max(), rel=1e-12)


def test_bc_single_point():
    assert len(bestcandidate_sample(UNIT2, 1, seed=2)) == 1


def test_gfp_spreads_better_than_random():
    wins = 0
    for s in range(20):
        g = pdist(greedyfp_sample(UNIT2, 50, seed=s).points).min()
        r = pdist(random_sample(UNIT2, 50, seed=s).points).min()
        wins += g >= r
    assert wins >= 18


@pytest.mark.parametrize("name", ["random", "lhs", "gfp", "bc"])
def test_all_samplers_in_bounds_and_deterministic(name):
    b = BoundsBox([0.02, 0.2, 0.06, 4e6, 0.0], [0.09, 0.7, 0.15, 6e6, 7.0])
    f = get_sampler(name)
    a, c = f(b, 30, 5), f(b, 30, 5)
    assert b.contains(a.points)
    np.testing.assert_array_equal(a.points, c.points)


def test_unknown_sampler():
    with pytest.raises(ValueError):
        get_sampler("sobol")


def test_csv_roundtrip(tmp_path):
    b = BoundsBox([0, 0], [1, 2], names=("a", "b"))
    batch = lhs_sample(b, 7, seed=1)
    batch.to_csv(tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "a,b"
    back = SampleBatch.from_csv(tmp_path / "s.csv", b)
    np.testing.assert_array_equal(back.points, batch.points)


def test_invalid_n():
    with pytest.raises(ValueError):
        random_sample(UNIT2, 0, 0)

import itertools

import numpy as np
import pytest

from warpsim.core import Dataset, LabeledSeries, normalize_series
from warpsim.errors import CountOutOfRangeError
from warpsim.landmarks import (
    LandmarkSet,
    select_dselect,
    select_kmedoids,
    select_random,
)
from warpsim.sim import pairwise_identity_similarity


def unit_dataset(vectors, labels=None):
    """One single-moment series per unit vector; sim_I is then the plain
    scalar product, which makes oracles easy."""
    labels = labels or ["x"] * len(vectors)
    items = [
        LabeledSeries(normalize_series([list(v)], f"p{k}"), lab)
        for k, (v, lab) in enumerate(zip(vectors, labels))
    ]
    return Dataset.from_items(items)


def random_dataset(rng, m, d=2):
    items = [
        LabeledSeries(normalize_series(rng.normal(size=(int(rng.integers(1, 5)), d)), f"p{k}"), "x")
        for k in range(m)
    ]
    return Dataset.from_items(items)


class TestSelectRandom:
    def test_all_points_when_n_equals_m(self):
        ds = random_dataset(np.random.default_rng(0), 7)
        lms = select_random(ds, 7, seed=1)
        assert sorted(lms.indices) == list(range(7))

    def test_deterministic(self):
        ds = random_dataset(np.random.default_rng(1), 10)
        assert select_random(ds, 4, seed=9).indices == select_random(ds, 4, seed=9).indices

    def test_single_draw_valid(self):
        ds = random_dataset(np.random.default_rng(2), 10)
        lms = select_random(ds, 1, seed=3)
        assert len(lms.indices) == 1 and 0 <= lms.indices[0] < 10

    def test_count_out_of_range(self):
        ds = random_dataset(np.random.default_rng(3), 5)
        for bad in (0, 6, -1):
            with pytest.raises(CountOutOfRangeError):
                select_random(ds, bad, seed=0)

    def test_distinct_indices(self):
        ds = random_dataset(np.random.default_rng(4), 12)
        for seed in range(20):
            lms = select_random(ds, 8, seed=seed)
            assert len(set(lms.indices)) == 8


def pam_cost(delta, medoids):
    return float(delta[:, list(medoids)].min(axis=1).sum())


class TestSelectKMedoids:
    def test_every_point_medoid_costs_zero(self):
        ds = random_dataset(np.random.default_rng(5), 6)
        lms = select_kmedoids(ds, 6, seed=0)
        assert lms.indices == list(range(6))

    def test_two_tight_clusters_match_exhaustive_search(self):
        # two bundles of nearly-parallel unit vectors
        vecs = [
            (1.0, 0.02), (1.0, -0.02), (1.0, 0.0),
            (0.02, 1.0), (-0.02, 1.0), (0.0, 1.0),
        ]
        ds = unit_dataset(vecs)
        lms = select_kmedoids(ds, 2, seed=11)
        delta = 1.0 - pairwise_identity_similarity(ds.series_list())
        best = min(itertools.combinations(range(6), 2), key=lambda pair: pam_cost(delta, pair))
        assert pam_cost(delta, lms.indices) == pytest.approx(pam_cost(delta, best), abs=1e-12)
        assert set(lms.indices) & {0, 1, 2} and set(lms.indices) & {3, 4, 5}

    def test_swap_phase_never_worsens_seeded_start(self):
        rng = np.random.default_rng(6)
        ds = random_dataset(rng, 9)
        delta = 1.0 - pairwise_identity_similarity(ds.series_list())
        for seed in range(5):
            init = sorted(int(i) for i in np.random.default_rng(seed).choice(9, size=3, replace=False))
            lms = select_kmedoids(ds, 3, seed=seed)
            assert pam_cost(delta, lms.indices) <= pam_cost(delta, init) + 1e-12

    def test_indices_sorted_and_deterministic(self):
        ds = random_dataset(np.random.default_rng(7), 8)
        a = select_kmedoids(ds, 3, seed=2)
        b = select_kmedoids(ds, 3, seed=2)
        assert a.indices == b.indices == sorted(a.indices)

    def test_duplicate_points_tie_to_lower_index(self):
        vecs = [(1.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.0, 1.0)]
        ds = unit_dataset(vecs)
        lms = select_kmedoids(ds, 2, seed=0)
        # either member of a duplicate pair is a valid medoid; the swap scan
        # must settle on the lower index of each pair
        assert lms.indices == [0, 2]


class TestSelectDselect:
    def test_single_landmark_is_seeded_draw(self):
        ds = random_dataset(np.random.default_rng(8), 10)
        lms = select_dselect(ds, 1, seed=5)
        assert len(lms.indices) == 1
        assert lms.indices[0] == int(np.random.default_rng(5).integers(10))

    def test_picks_least_similar_point(self):
        # p0 = start, p1 similar to p0 (sim 0.9), p2 orthogonal to p0 (sim 0)
        vecs = [(1.0, 0.0), (0.9, np.sqrt(1 - 0.81)), (0.0, 1.0)]
        ds = unit_dataset(vecs)
        seed = next(s for s in range(100) if int(np.random.default_rng(s).integers(3)) == 0)
        lms = select_dselect(ds, 2, seed=seed)
        assert lms.indices == [0, 2]

    def test_exhaustion_returns_all_points(self):
        ds = random_dataset(np.random.default_rng(9), 6)
        lms = select_dselect(ds, 6, seed=1)
        assert sorted(lms.indices) == list(range(6))

    def test_greedy_steps_minimize_similarity_sum(self):
        rng = np.random.default_rng(10)
        ds = random_dataset(rng, 9)
        lms = select_dselect(ds, 5, seed=4)
        sims = pairwise_identity_similarity(ds.series_list())
        for step in range(1, 5):
            chosen = lms.indices[:step]
            nxt = lms.indices[step]
            totals = sims[:, chosen].sum(axis=1)
            best = min(
                (t, i) for i, t in enumerate(totals) if i not in chosen
            )
            assert (totals[nxt], nxt) == best

    def test_deterministic(self):
        ds = random_dataset(np.random.default_rng(11), 8)
        assert select_dselect(ds, 4, seed=3).indices == select_dselect(ds, 4, seed=3).indices


class TestLandmarkSet:
    def test_serialization_roundtrip(self):
        lms = LandmarkSet([3, 1, 4], "random", 99)
        assert LandmarkSet.from_dict(lms.to_dict()) == lms

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError):
            LandmarkSet([1, 1], "random", 0)

    def test_rejects_empty(self):
        with pytest.raises(CountOutOfRangeError):
            LandmarkSet([], "random", 0)

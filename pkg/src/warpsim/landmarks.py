"""Landmark selection heuristics: Random, KMedoids, DSelect.

All three ignore labels, return distinct indices into the training set and
are deterministic for a given seed.  KMedoids and DSelect need the full
pairwise identity-metric similarity matrix, which is quadratic in the
training size; Random needs nothing and is the default elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset
from .errors import CountOutOfRangeError
from .sim import pairwise_identity_similarity

KMEDOIDS_MAX_ROUNDS = 100

METHOD_RANDOM = "random"
METHOD_KMEDOIDS = "kmedoids"
METHOD_DSELECT = "dselect"


@dataclass
class LandmarkSet:
    indices: list[int]
    method: str
    seed: int

    def __post_init__(self):
        if not self.indices:
            raise CountOutOfRangeError("landmark set cannot be empty")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("landmark indices must be distinct")

    def to_dict(self) -> dict:
        return {"method": self.method, "seed": self.seed, "indices": list(self.indices)}

    @classmethod
    def from_dict(cls, obj: dict) -> "LandmarkSet":
        return cls(list(obj["indices"]), obj["method"], int(obj["seed"]))


def _check_count(n: int, m: int) -> None:
    if not 1 <= n <= m:
        raise CountOutOfRangeError(f"landmark count {n} outside [1, {m}]")


def select_random(train: Dataset, n: int, seed: int) -> LandmarkSet:
    """n distinct uniform draws without replacement."""
    _check_count(n, len(train))
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(train), size=n, replace=False)
    return LandmarkSet([int(i) for i in idx], METHOD_RANDOM, seed)


def _dissimilarity(train: Dataset) -> np.ndarray:
    # delta = 1 - sim_I; it can exceed 1, which the swap search tolerates.
    return 1.0 - pairwise_identity_similarity(train.series_list())


def _total_cost(delta: np.ndarray, medoids: list[int]) -> float:
    return float(delta[:, medoids].min(axis=1).sum())


def select_kmedoids(train: Dataset, n: int, seed: int) -> LandmarkSet:
    """PAM-style swap optimization on 1 - sim_I, seeded initialization.

    Applies the best strictly-improving (medoid, candidate) swap per round,
    scanning both in ascending index order so ties resolve to the lowest
    indices; stops when no swap improves the total cost or after 100 rounds.
    Returns medoid indices in ascending order.
    """
    m = len(train)
    _check_count(n, m)
    delta = _dissimilarity(train)
    rng = np.random.default_rng(seed)
    medoids = sorted(int(i) for i in rng.choice(m, size=n, replace=False))
    cost = _total_cost(delta, medoids)

    for _ in range(KMEDOIDS_MAX_ROUNDS):
        best_swap = None
        best_cost = cost
        in_set = set(medoids)
        for pos in range(n):
            for cand in range(m):
                if cand in in_set:
                    continue
                trial = medoids.copy()
                trial[pos] = cand
                c = _total_cost(delta, trial)
                if c < best_cost:
                    best_cost = c
                    best_swap = (pos, cand)
        if best_swap is None:
            break
        medoids[best_swap[0]] = best_swap[1]
        cost = best_cost

    # Cost-equal medoids (duplicate points) settle on the lowest index.
    changed = True
    while changed:
        changed = False
        in_set = set(medoids)
        for pos in range(n):
            for cand in range(medoids[pos]):
                if cand in in_set:
                    continue
                trial = medoids.copy()
                trial[pos] = cand
                if _total_cost(delta, trial) == cost:
                    medoids[pos] = cand
                    in_set = set(medoids)
                    changed = True
                    break
    return LandmarkSet(sorted(medoids), METHOD_KMEDOIDS, seed)


def select_dselect(train: Dataset, n: int, seed: int) -> LandmarkSet:
    """Greedy diversity selection.

    Starts from one uniformly drawn point; every next landmark is the
    remaining point with the minimal sum of sim_I to those already selected
    (ties to the lowest index).
    """
    m = len(train)
    _check_count(n, m)
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(m))]
    if n > 1:
        sims = pairwise_identity_similarity(train.series_list())
        selected = np.zeros(m, dtype=bool)
        selected[chosen[0]] = True
        total = sims[:, chosen[0]].copy()
        while len(chosen) < n:
            nxt = int(np.argmin(np.where(selected, np.inf, total)))
            chosen.append(nxt)
            selected[nxt] = True
            total += sims[:, nxt]
    return LandmarkSet(chosen, METHOD_DSELECT, seed)

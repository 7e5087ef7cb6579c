"""Seeded synthetic two-class generator for end-to-end runs.

Each series has four channels.  Channel 0 carries a strong shared
oscillation whose per-series gain varies, channel 1 is noise, and a
positive envelope feeds channels 2-3 through a class-specific mixture:
roughly (0.87, 0.50) for the first class and (0.50, 0.87) for the second.
The two mixtures are far from orthogonal, so plain scalar-product
affinities (identity metric) see only a small same-class/cross-class gap
on top of the dominant shared channel, while a metric that weights the
channel-2/3 block with opposite signs separates the classes cleanly.
Per-moment normalization keeps row-norm statistics identical across
classes (the mixtures are unit vectors), so nothing leaks through norms.
"""

from __future__ import annotations

import math

import numpy as np

from .core import Dataset, LabeledSeries, normalize_series

CLASS_LABELS = ("c0", "c1")
DIM = 4
MIN_LEN = 8
MAX_LEN = 15

_MIX = 0.65  # contrast of the class mixtures on channels 2-3
_HI = math.sqrt((1.0 + _MIX) / 2.0)
_LO = math.sqrt((1.0 - _MIX) / 2.0)
_CLASS_DIRS = {
    CLASS_LABELS[0]: np.array([0.0, 0.0, _HI, _LO]),
    CLASS_LABELS[1]: np.array([0.0, 0.0, _LO, _HI]),
}


def _one_series(rng: np.random.Generator, label: str, sid: str) -> LabeledSeries:
    t = int(rng.integers(MIN_LEN, MAX_LEN + 1))
    steps = np.arange(t) / t
    gain = rng.uniform(0.8, 2.6)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    shared = gain * (1.0 + 0.4 * np.sin(2.0 * math.pi * steps + phase))

    env_gain = rng.uniform(0.8, 1.2)
    env_phase = rng.uniform(0.0, 2.0 * math.pi)
    envelope = env_gain * (0.88 + 0.25 * np.sin(2.0 * math.pi * 1.7 * steps + env_phase))

    values = np.zeros((t, DIM))
    values[:, 0] = shared
    values[:, 1] = rng.normal(0.0, 0.3, size=t)
    values += envelope[:, None] * _CLASS_DIRS[label][None, :]
    values += rng.normal(0.0, 0.04, size=(t, DIM))
    return LabeledSeries(normalize_series(values, sid), label)


def make_synthetic(n_per_class: int, seed: int) -> Dataset:
    """A balanced two-class dataset of `n_per_class` series per class."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    rng = np.random.default_rng(seed)
    items = []
    for label in CLASS_LABELS:
        for k in range(n_per_class):
            items.append(_one_series(rng, label, f"{label}-{k:03d}"))
    return Dataset.from_items(items)


def make_synthetic_split(
    n_train_per_class: int, n_test_per_class: int, seed: int
) -> tuple[Dataset, Dataset]:
    """Train and test sets drawn from one seeded stream (train first)."""
    rng = np.random.default_rng(seed)
    train, test = [], []
    for bucket, count, tag in ((train, n_train_per_class, "tr"), (test, n_test_per_class, "te")):
        for label in CLASS_LABELS:
            for k in range(count):
                bucket.append(_one_series(rng, label, f"{tag}-{label}-{k:03d}"))
    return Dataset.from_items(train), Dataset.from_items(test)

"""Bilinear alignment similarity and the landmark feature map.

For a pair of series (A, B) and an alignment path Y of length L, the
similarity under a d x d metric M is

    sim_M(A, B) = tr(C_M(A, B)^T Y) / L = <M, G>   with  G = A^T Y B / L,

a plain Frobenius inner product: the pair-specific coefficient G does not
depend on M.  Alignments are computed once under the identity metric
("fixed_identity" policy) and held fixed, which keeps every downstream
objective linear in M; re-aligning under a learned metric is out of scope.

Because alignments are length-normalized after the fact, self-similarity
is not forced to 1: a longer path can out-score the diagonal even for
identical series.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .align import dtw_align
from .core import Dataset, LabeledSeries, TimeSeries
from .errors import DimMismatchError, EmptyLandmarksError, NonFiniteError

POLICY_FIXED_IDENTITY = "fixed_identity"


@dataclass
class SimilarityModel:
    """A metric, a landmark set and the (gamma, lambda) pair that shaped them.

    `feature_map` built from this model sends any series X to the vector of
    similarities to the landmarks, in landmark order.
    """

    metric: np.ndarray  # (d, d)
    landmarks: list[LabeledSeries]
    gamma: float
    lam: float
    policy: str = POLICY_FIXED_IDENTITY

    def __post_init__(self):
        self.metric = np.asarray(self.metric, dtype=np.float64)
        if self.metric.ndim != 2 or self.metric.shape[0] != self.metric.shape[1]:
            raise DimMismatchError(f"metric must be square, got {self.metric.shape}")
        if not np.all(np.isfinite(self.metric)):
            raise NonFiniteError("metric contains non-finite entries")
        if not self.landmarks:
            raise EmptyLandmarksError("a similarity model needs at least one landmark")
        d = self.metric.shape[0]
        for lm in self.landmarks:
            if lm.series.dim != d:
                raise DimMismatchError(
                    f"landmark {lm.series.id!r} has dim {lm.series.dim}, metric is {d} x {d}"
                )
        if self.gamma <= 0 or self.lam <= 0:
            raise ValueError("gamma and lambda must be positive")
        if self.policy != POLICY_FIXED_IDENTITY:
            raise ValueError(f"unknown alignment policy {self.policy!r}")

    @property
    def dim(self) -> int:
        return self.metric.shape[0]

    @property
    def n_landmarks(self) -> int:
        return len(self.landmarks)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "gamma": self.gamma,
            "lambda": self.lam,
            "policy": self.policy,
            "metric": self.metric.tolist(),
            "landmarks": [
                {"id": lm.series.id, "label": lm.label, "values": lm.series.values.tolist()}
                for lm in self.landmarks
            ],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "SimilarityModel":
        landmarks = [
            LabeledSeries(TimeSeries(rec["id"], np.asarray(rec["values"])), rec["label"])
            for rec in obj["landmarks"]
        ]
        return cls(
            metric=np.asarray(obj["metric"], dtype=np.float64),
            landmarks=landmarks,
            gamma=float(obj["gamma"]),
            lam=float(obj["lambda"]),
            policy=obj.get("policy", POLICY_FIXED_IDENTITY),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2)

    @classmethod
    def load(cls, path) -> "SimilarityModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def alignment_feature(a: TimeSeries, b: TimeSeries, policy: str = POLICY_FIXED_IDENTITY) -> np.ndarray:
    """The d x d coefficient G = A^T Y B / L of the pair (a, b).

    Y is the path matrix of the identity-metric alignment, so that
    sim_M(a, b) = <M, G> for every metric M.
    """
    if policy != POLICY_FIXED_IDENTITY:
        raise ValueError(f"unknown alignment policy {policy!r}")
    if a.dim != b.dim:
        raise DimMismatchError(f"series dims disagree: {a.dim} vs {b.dim}")
    al = dtw_align(a.values @ b.values.T)
    pi, pj = al.path[:, 0], al.path[:, 1]
    return a.values[pi].T @ b.values[pj] / al.length


def similarity(a: TimeSeries, b: TimeSeries, model: SimilarityModel) -> float:
    """Length-normalized aligned affinity <M, G> of the pair under the model."""
    if a.dim != model.dim or b.dim != model.dim:
        raise DimMismatchError(
            f"series dims {a.dim}/{b.dim} do not match model dim {model.dim}"
        )
    g = alignment_feature(a, b, model.policy)
    return float(np.vdot(model.metric, g))


def feature_map(x: TimeSeries, model: SimilarityModel) -> np.ndarray:
    """Vector of similarities of `x` to each landmark, in landmark order."""
    return np.array([similarity(x, lm.series, model) for lm in model.landmarks])


def alignment_features(series: list[TimeSeries], landmarks: list[TimeSeries]) -> np.ndarray:
    """The (m, n, d, d) tensor of pairwise coefficients G.

    Row order follows `series`, column order `landmarks`; the tensor depends
    only on the data (alignments are identity-metric), so it can be cached
    and reused across metrics, signs and hyperparameters.
    """
    if not series or not landmarks:
        raise EmptyLandmarksError("need at least one series and one landmark")
    d = series[0].dim
    out = np.empty((len(series), len(landmarks), d, d))
    for i, s in enumerate(series):
        for j, lm in enumerate(landmarks):
            out[i, j] = alignment_feature(s, lm)
    return out


def features_to_matrix(feats: np.ndarray, metric: np.ndarray) -> np.ndarray:
    """Collapse a G tensor to the m x n feature matrix under one metric."""
    return np.tensordot(feats, np.asarray(metric, dtype=np.float64), axes=([2, 3], [0, 1]))


def feature_matrix(ds: Dataset, model: SimilarityModel) -> np.ndarray:
    """Feature vectors of every dataset item, one row per item.

    Rows reproduce `feature_map` bit-exactly (same code path), so cached and
    per-item computations never disagree.
    """
    if ds.dim != model.dim:
        raise DimMismatchError(f"dataset dim {ds.dim} does not match model dim {model.dim}")
    if len(ds) == 0:
        return np.zeros((0, model.n_landmarks))
    return np.stack([feature_map(it.series, model) for it in ds.items])


def pairwise_identity_similarity(series: list[TimeSeries]) -> np.ndarray:
    """All-pairs sim_I (identity metric) matrix, used by landmark selection."""
    m = len(series)
    out = np.empty((m, m))
    for i, a in enumerate(series):
        for j, b in enumerate(series):
            out[i, j] = np.trace(alignment_feature(a, b))
    return out

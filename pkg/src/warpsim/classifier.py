"""L1-budgeted linear separation in landmark-similarity space.

The separator alpha minimizes the total hinge loss of the signed scores
<alpha, phi_i> under the budget ||alpha||_1 <= 1/gamma.  It is found by
projected subgradient descent: after every step the iterate is projected
back onto the L1 ball (exact sorted-magnitude projection), with
best-iterate tracking.  Small budgets force coordinates to exactly zero,
so tightening gamma sparsifies the classifier.

Multiclass goes through a one-vs-rest wrapper: one (metric, separator)
pair per class, prediction by maximal raw score with ties broken by class
order.  The zero score maps to +1 by convention.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, LabeledSeries
from .errors import (
    DimMismatchError,
    LengthMismatchError,
    NonFiniteError,
    SingleClassError,
)
from .landmarks import LandmarkSet
from .metric import MetricProblem, SolverOptions, learn_metric
from .sim import SimilarityModel, alignment_features, feature_map, features_to_matrix


def project_l1_ball(v, radius: float) -> np.ndarray:
    """Euclidean projection of `v` onto {x : ||x||_1 <= radius}.

    Exact soft-threshold solution via sorted magnitudes, O(n log n).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise NonFiniteError("cannot project a non-finite vector")
    mags = np.abs(v)
    if mags.sum() <= radius:
        return v.copy()
    sorted_mags = np.sort(mags)[::-1]
    cumsum = np.cumsum(sorted_mags)
    ranks = np.arange(1, v.size + 1)
    rho = np.nonzero(sorted_mags - (cumsum - radius) / ranks > 0)[0][-1]
    theta = (cumsum[rho] - radius) / (rho + 1)
    return np.sign(v) * np.maximum(mags - theta, 0.0)


@dataclass
class Separator:
    """Landmark weights alpha with ||alpha||_1 <= 1/gamma."""

    alpha: np.ndarray
    gamma: float

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=np.float64)
        if self.alpha.ndim != 1:
            raise DimMismatchError("alpha must be a vector")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        budget = 1.0 / self.gamma
        if np.abs(self.alpha).sum() > budget + 1e-9:
            raise ValueError(
                f"||alpha||_1 = {np.abs(self.alpha).sum()} exceeds budget {budget}"
            )


def hinge_total(alpha: np.ndarray, phi: np.ndarray, signs: np.ndarray) -> float:
    """Total hinge loss sum_i [1 - l_i <alpha, phi_i>]_+."""
    return float(np.maximum(0.0, 1.0 - signs * (phi @ alpha)).sum())


def learn_separator(phi: np.ndarray, signs, gamma: float, opts: SolverOptions | None = None) -> Separator:
    """Fit the budgeted separator on a feature matrix.

    Steps are normalized (step0 * budget / (||g|| * sqrt(t))) so the solver
    is invariant to the feature scale; every iterate is projected back onto
    the budget ball, so the constraint holds exactly.  The total hinge loss
    is piecewise linear and the trajectory oscillates, so there is no
    reliable stall test: the solver runs its full budget unless the loss
    hits zero or the subgradient vanishes, and returns the best iterate.
    """
    opts = opts or SolverOptions()
    phi = np.asarray(phi, dtype=np.float64)
    if phi.ndim != 2 or phi.shape[0] < 1 or phi.shape[1] < 1:
        raise DimMismatchError(f"feature matrix must be non-empty 2-D, got {phi.shape}")
    if not np.all(np.isfinite(phi)):
        raise NonFiniteError("feature matrix contains non-finite entries")
    m, n = phi.shape
    signs = np.asarray(signs, dtype=np.float64)
    if signs.shape != (m,):
        raise LengthMismatchError(f"expected {m} signs, got {signs.shape}")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    budget = 1.0 / gamma

    alpha = np.zeros(n)
    best_alpha = alpha.copy()
    best_loss = hinge_total(alpha, phi, signs)
    for t in range(1, opts.max_iters + 1):
        margins = signs * (phi @ alpha)
        weights = np.where(margins < 1.0, signs, 0.0)
        if not weights.any():
            break
        g = -(phi.T @ weights)
        gnorm = np.linalg.norm(g)
        if gnorm == 0.0:
            break
        step = opts.step0 * budget / (gnorm * math.sqrt(t))
        alpha = project_l1_ball(alpha - step * g, budget)
        loss = float(np.maximum(0.0, 1.0 - signs * (phi @ alpha)).sum())
        if loss < best_loss:
            best_loss = loss
            best_alpha = alpha.copy()
        if best_loss == 0.0:
            break
    return Separator(best_alpha, gamma)


def predict_binary(sep: Separator, phi) -> tuple[int, float]:
    """Sign and raw score of one feature vector; sign(0) = +1."""
    phi = np.asarray(phi, dtype=np.float64)
    if phi.shape != sep.alpha.shape:
        raise DimMismatchError(f"feature length {phi.shape} != alpha length {sep.alpha.shape}")
    score = float(sep.alpha @ phi)
    return (1 if score >= 0.0 else -1), score


@dataclass
class ClassModel:
    label: str
    similarity: SimilarityModel
    separator: Separator


@dataclass
class OvrModel:
    """One (similarity model, separator) pair per class."""

    classes: list[str]
    models: list[ClassModel]
    report: dict | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "models": [
                {
                    "label": cm.label,
                    "similarity": cm.similarity.to_dict(),
                    "alpha": cm.separator.alpha.tolist(),
                }
                for cm in self.models
            ],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "OvrModel":
        models = []
        for rec in obj["models"]:
            simmodel = SimilarityModel.from_dict(rec["similarity"])
            models.append(
                ClassModel(rec["label"], simmodel, Separator(np.asarray(rec["alpha"]), simmodel.gamma))
            )
        return cls(list(obj["classes"]), models)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2)

    @classmethod
    def load(cls, path) -> "OvrModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def fit_binary(
    features: np.ndarray,
    signs: np.ndarray,
    landmark_signs: np.ndarray,
    gamma: float,
    lam: float,
    opts: SolverOptions,
    learn_metric_enabled: bool = True,
) -> tuple[np.ndarray, Separator, dict]:
    """Metric + separator for one binary subproblem on a cached G tensor.

    With `learn_metric_enabled` false the metric stays the identity
    (the non-learned baseline); lambda is then unused.
    """
    m, n, d, _ = features.shape
    if learn_metric_enabled:
        h = np.einsum("i,j,ijkl->ikl", signs, landmark_signs, features) / (n * gamma)
        metric, rep = learn_metric(MetricProblem(h, gamma, lam), opts)
        report = rep.to_dict()
    else:
        metric = np.eye(d)
        report = {"identity_metric": True}
    phi = features_to_matrix(features, metric)
    sep = learn_separator(phi, signs, gamma, opts)
    report["alpha_l1"] = float(np.abs(sep.alpha).sum())
    report["separator_hinge"] = hinge_total(sep.alpha, phi, signs)
    return metric, sep, report


def class_signs(labels: list[str], positive: str) -> np.ndarray:
    return np.array([1.0 if lab == positive else -1.0 for lab in labels])


def ovr_train(
    train: Dataset,
    landmark_set: LandmarkSet,
    grid=None,
    opts: SolverOptions | None = None,
    learn_metric_enabled: bool = True,
) -> OvrModel:
    """Train one binary model per class; (gamma, lambda) picked by the
    evaluation module's holdout cross-validation over `grid`.

    Landmarks are fixed before validation splitting and shared by all
    classes; each class's subproblem re-signs them as +1 for that class.
    """
    from .evaluate import Grid, cross_validate

    opts = opts or SolverOptions()
    grid = grid or Grid()
    if len(train.classes) < 2:
        raise SingleClassError(f"need >= 2 classes, got {train.classes}")
    landmarks = [train.items[i] for i in landmark_set.indices]
    gamma, lam, table = cross_validate(
        train, landmark_set, grid, opts.seed, opts=opts, learn_metric_enabled=learn_metric_enabled
    )
    features = alignment_features(train.series_list(), [lm.series for lm in landmarks])
    labels = train.labels()
    lm_labels = [lm.label for lm in landmarks]

    models = []
    per_class = {}
    for cls in train.classes:
        signs = class_signs(labels, cls)
        lm_signs = class_signs(lm_labels, cls)
        metric, sep, report = fit_binary(
            features, signs, lm_signs, gamma, lam, opts, learn_metric_enabled
        )
        models.append(
            ClassModel(cls, SimilarityModel(metric, landmarks, gamma, lam), sep)
        )
        per_class[cls] = report
    report = {
        "gamma": gamma,
        "lambda": lam,
        "cv_table": table,
        "per_class": per_class,
        "landmarks": landmark_set.to_dict(),
        "metric_learning": learn_metric_enabled,
    }
    return OvrModel(list(train.classes), models, report)


def ovr_scores(model: OvrModel, x) -> np.ndarray:
    """Raw binary score of `x` under every class model, in class order."""
    scores = np.empty(len(model.models))
    for k, cm in enumerate(model.models):
        phi = feature_map(x, cm.similarity)
        scores[k] = predict_binary(cm.separator, phi)[1]
    return scores


def ovr_predict(model: OvrModel, x) -> str:
    """Class with the maximal raw score; ties go to the earliest class."""
    scores = ovr_scores(model, x)
    return model.classes[int(np.argmax(scores))]


def ovr_predict_dataset(model: OvrModel, ds: Dataset) -> list[str]:
    """Predict every item of `ds`; when all class models share one landmark
    list the G tensor is computed once and reused across classes."""
    first = model.models[0].similarity.landmarks
    shared = all(
        len(cm.similarity.landmarks) == len(first)
        and all(
            a is b
            or (a.series.id == b.series.id and np.array_equal(a.series.values, b.series.values))
            for a, b in zip(cm.similarity.landmarks, first)
        )
        for cm in model.models
    )
    if not shared:
        return [ovr_predict(model, it.series) for it in ds.items]
    feats = alignment_features(ds.series_list(), [lm.series for lm in first])
    scores = np.stack(
        [
            features_to_matrix(feats, cm.similarity.metric) @ cm.separator.alpha
            for cm in model.models
        ],
        axis=1,
    )
    return [model.classes[int(k)] for k in np.argmax(scores, axis=1)]

"""Evaluation: accuracy, baselines, hyperparameter search, bound checks, PCA.

The generalization-bound right-hand side implemented here is

    4d / (gamma^2 lambda m)
      + (4d / (gamma^2 lambda) + (1/gamma) sqrt(2d / lambda))
        * sqrt(2 log(2/delta) / m),

which upper-bounds, with probability 1 - delta, the excess of the true
expected hinge loss over the empirical one for a metric minimizing the
regularized objective.  `bound_report` checks the inequality with a
held-out estimate of the expectation; at practical scales it should always
hold with large slack.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .classifier import class_signs, fit_binary
from .core import Dataset, split_dataset
from .errors import (
    DegenerateFoldError,
    DimMismatchError,
    EmptyDatasetError,
    EmptyInputError,
    LengthMismatchError,
    NonPositiveInputError,
    SingleClassError,
    TooFewRowsError,
)
from .landmarks import LandmarkSet
from .metric import MetricProblem, SolverOptions, example_losses
from .sim import alignment_feature, alignment_features, features_to_matrix

FOLD_REDRAW_LIMIT = 20


def default_gammas() -> list[float]:
    return [10.0 ** k for k in range(-4, 2)]


def default_lambdas() -> list[float]:
    return [0.1, 1.0, 10.0]


@dataclass
class Grid:
    """Hyperparameter grid plus the holdout fraction used to score it."""

    gammas: list[float] = field(default_factory=default_gammas)
    lambdas: list[float] = field(default_factory=default_lambdas)
    validation_fraction: float = 0.3

    def __post_init__(self):
        if not self.gammas or not self.lambdas:
            raise EmptyInputError("grid must have at least one gamma and one lambda")
        if any(g <= 0 for g in self.gammas) or any(l <= 0 for l in self.lambdas):
            raise NonPositiveInputError("grid entries must be positive")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in (0, 1)")


def accuracy(preds, truth) -> float:
    """Fraction of equal entries."""
    preds, truth = list(preds), list(truth)
    if len(preds) != len(truth):
        raise LengthMismatchError(f"{len(preds)} predictions vs {len(truth)} labels")
    if not preds:
        raise EmptyInputError("cannot score zero predictions")
    return sum(p == t for p, t in zip(preds, truth)) / len(preds)


def nn1_classify(train: Dataset, x, metric: np.ndarray) -> str:
    """Label of the training series most similar to `x` under `metric`;
    ties go to the lower index."""
    if len(train) == 0:
        raise EmptyDatasetError("1NN needs a non-empty training set")
    metric = np.asarray(metric, dtype=np.float64)
    best_sim, best_label = -np.inf, None
    for it in train.items:
        s = float(np.vdot(metric, alignment_feature(x, it.series)))
        if s > best_sim:
            best_sim, best_label = s, it.label
    return best_label


def _validation_fold(train: Dataset, fraction: float, seed: int) -> tuple[list[int], list[int]]:
    """Stratified subtrain/validation index split; redraws folds missing a
    class, and fails once redraws provably cannot help (the per-class
    allocation is count-deterministic)."""
    labels = train.labels()
    for attempt in range(FOLD_REDRAW_LIMIT):
        sub, val = split_dataset(train, 1.0 - fraction, seed + attempt)
        sub_classes = set(it.label for it in sub.items)
        val_classes = set(it.label for it in val.items)
        if sub_classes == set(train.classes) and val_classes == set(train.classes):
            id_to_pos = {id(it): k for k, it in enumerate(train.items)}
            return (
                [id_to_pos[id(it)] for it in sub.items],
                [id_to_pos[id(it)] for it in val.items],
            )
    missing = set(train.classes) - val_classes
    raise DegenerateFoldError(
        f"classes {sorted(missing)} can never reach the validation side at "
        f"fraction {fraction}; add data or lower the fraction"
    )


def cross_validate(
    train: Dataset,
    landmark_set: LandmarkSet,
    grid: Grid,
    seed: int,
    opts: SolverOptions | None = None,
    learn_metric_enabled: bool = True,
) -> tuple[float, float, list[dict]]:
    """Score every (gamma, lambda) on one stratified holdout fold.

    Returns the argmax-accuracy pair and the full score table.  Ties prefer
    the larger gamma (smaller budget 1/gamma), then the smaller lambda.
    """
    opts = opts or SolverOptions()
    if len(train) == 0:
        raise EmptyDatasetError("cannot cross-validate an empty dataset")
    if len(train.classes) < 2:
        raise SingleClassError(f"need >= 2 classes, got {train.classes}")
    sub_idx, val_idx = _validation_fold(train, grid.validation_fraction, seed)

    landmarks = [train.items[i] for i in landmark_set.indices]
    features = alignment_features(train.series_list(), [lm.series for lm in landmarks])
    labels = train.labels()
    lm_labels = [lm.label for lm in landmarks]
    val_truth = [labels[i] for i in val_idx]

    lambdas = grid.lambdas if learn_metric_enabled else [grid.lambdas[0]]
    table = []
    best = None
    for gamma in grid.gammas:
        for lam in lambdas:
            scores = np.empty((len(val_idx), len(train.classes)))
            for k, cls in enumerate(train.classes):
                signs = class_signs(labels, cls)
                lm_signs = class_signs(lm_labels, cls)
                metric, sep, _ = fit_binary(
                    features[sub_idx],
                    signs[sub_idx],
                    lm_signs,
                    gamma,
                    lam,
                    opts,
                    learn_metric_enabled,
                )
                scores[:, k] = features_to_matrix(features[val_idx], metric) @ sep.alpha
            preds = [train.classes[int(i)] for i in np.argmax(scores, axis=1)]
            acc = accuracy(preds, val_truth)
            table.append({"gamma": gamma, "lambda": lam, "accuracy": acc})
            key = (acc, gamma, -lam)
            if best is None or key > best[0]:
                best = (key, gamma, lam)
    return best[1], best[2], table


def landmark_count_bound(epsilon1: float, gamma: float, delta: float, tau: float) -> int:
    """Landmark count sufficient for the feature-space separator guarantee:

        ceil((2/tau) * (log(2/delta) + 16 log(2/delta) / (epsilon1*gamma)^2)).

    Warns (but still computes) when delta >= gamma*epsilon1/4, where the
    guarantee's premise fails.
    """
    for name, v in (("epsilon1", epsilon1), ("gamma", gamma), ("delta", delta), ("tau", tau)):
        if v <= 0:
            raise NonPositiveInputError(f"{name} must be positive, got {v}")
    if delta >= gamma * epsilon1 / 4:
        warnings.warn(
            f"delta={delta} is not below gamma*epsilon1/4={gamma * epsilon1 / 4}; "
            "the landmark-count guarantee does not apply",
            stacklevel=2,
        )
    log_term = math.log(2.0 / delta)
    return math.ceil((2.0 / tau) * (log_term + 16.0 * log_term / (epsilon1 * gamma) ** 2))


def generalization_bound_rhs(d: int, gamma: float, lam: float, m: int, delta: float) -> float:
    """Right-hand side of the uniform-stability generalization bound."""
    for name, v in (("d", d), ("gamma", gamma), ("lambda", lam), ("m", m)):
        if v <= 0:
            raise NonPositiveInputError(f"{name} must be positive, got {v}")
    if not 0.0 < delta < 1.0:
        raise NonPositiveInputError(f"delta must be in (0, 1), got {delta}")
    kappa = 4.0 * d / (gamma * gamma * lam)
    dev = kappa + math.sqrt(2.0 * d / lam) / gamma
    return kappa / m + dev * math.sqrt(2.0 * math.log(2.0 / delta) / m)


@dataclass
class BoundReport:
    empirical_risk: float   # mean hinge loss on the training problem
    holdout_risk: float     # held-out estimate of the expected loss
    rhs: float
    holds: bool

    def to_dict(self) -> dict:
        return {
            "empirical_risk": self.empirical_risk,
            "holdout_risk": self.holdout_risk,
            "bound_rhs": self.rhs,
            "bound_holds": self.holds,
        }


def bound_report(
    metric: np.ndarray,
    train_problem: MetricProblem,
    holdout_problem: MetricProblem,
    delta: float,
) -> BoundReport:
    """Check holdout risk <= empirical risk + bound RHS for a learned metric.

    Both problems must be built against the same landmarks and (gamma,
    lambda); the bound is evaluated at the training sample size.
    """
    if (train_problem.gamma, train_problem.lam) != (holdout_problem.gamma, holdout_problem.lam):
        raise DimMismatchError("train and holdout problems disagree on (gamma, lambda)")
    emp = float(example_losses(metric, train_problem).mean())
    hold = float(example_losses(metric, holdout_problem).mean())
    rhs = generalization_bound_rhs(
        train_problem.dim, train_problem.gamma, train_problem.lam, train_problem.m, delta
    )
    return BoundReport(emp, hold, rhs, hold <= emp + rhs)


@dataclass
class EvalReport:
    accuracy: float
    per_class_accuracy: dict[str, float]
    confusion: dict[str, dict[str, int]]
    n: int
    mean_hinge_loss: float | None = None
    bounds: BoundReport | None = None

    def to_dict(self) -> dict:
        out = {
            "accuracy": self.accuracy,
            "per_class_accuracy": self.per_class_accuracy,
            "confusion": self.confusion,
            "n": self.n,
        }
        if self.mean_hinge_loss is not None:
            out["mean_hinge_loss"] = self.mean_hinge_loss
        if self.bounds is not None:
            out["bounds"] = self.bounds.to_dict()
        return out


def evaluation_report(truth, preds, classes) -> EvalReport:
    """Accuracy, per-class accuracy and confusion counts (rows = truth)."""
    acc = accuracy(preds, truth)
    confusion = {c: {k: 0 for k in classes} for c in classes}
    for t, p in zip(truth, preds):
        confusion.setdefault(t, {}).setdefault(p, 0)
        confusion[t][p] += 1
    per_class = {}
    for c in classes:
        total = sum(confusion[c].values())
        per_class[c] = (confusion[c].get(c, 0) / total) if total else 0.0
    return EvalReport(acc, per_class, confusion, len(list(truth)))


def confidence_interval(values) -> tuple[float, float]:
    """Mean and 1.96 * sd / sqrt(k) half-width (normal approximation)."""
    v = np.asarray(list(values), dtype=np.float64)
    if v.size == 0:
        raise EmptyInputError("no values")
    if v.size == 1:
        return float(v[0]), 0.0
    return float(v.mean()), float(1.96 * v.std(ddof=1) / math.sqrt(v.size))


def pca_project(phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First two principal components of a feature matrix.

    Columns are centered; components come from the symmetric eigenvalue
    decomposition of the covariance, ordered by descending eigenvalue, with
    each component's largest-magnitude loading made positive so the output
    is reproducible.  Returns (m x 2 coordinates, explained-variance
    fractions of the two components).
    """
    phi = np.asarray(phi, dtype=np.float64)
    if phi.ndim != 2:
        raise DimMismatchError(f"feature matrix must be 2-D, got {phi.shape}")
    m, n = phi.shape
    if m < 2:
        raise TooFewRowsError(f"PCA needs at least 2 rows, got {m}")
    if n < 2:
        raise DimMismatchError(f"PCA needs at least 2 feature columns, got {n}")
    centered = phi - phi.mean(axis=0)
    cov = centered.T @ centered / (m - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    vecs = eigvecs[:, order[:2]]
    for k in range(2):
        j = int(np.argmax(np.abs(vecs[:, k])))
        if vecs[j, k] < 0:
            vecs[:, k] = -vecs[:, k]
    total = eigvals.sum()
    fractions = eigvals[:2] / total if total > 0 else np.zeros(2)
    return centered @ vecs, fractions

"""Domain types, per-moment normalization, dataset I/O and splitting.

A dataset is a JSON Lines file, one series per line:

    {"id": "<string>", "label": "<string>", "values": [[f64 x d] x t]}

Series may differ in length t but must share the feature dimension d.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimMismatchError,
    EmptyDatasetError,
    NonFiniteError,
    ParseError,
    ZeroTimeStepError,
)

ZERO_NORM_TOL = 1e-12


@dataclass
class TimeSeries:
    """A multivariate series: one row per time moment, one column per feature.

    Rows are unit L2 norm once the series has passed through
    `normalize_series`; the similarity bounds downstream rely on that.
    """

    id: str
    values: np.ndarray  # (t, d) float64

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DimMismatchError(
                f"series {self.id!r}: values must be a non-empty t x d matrix"
            )
        if not np.all(np.isfinite(v)):
            raise NonFiniteError(f"series {self.id!r} contains non-finite values")
        self.values = v

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass
class LabeledSeries:
    series: TimeSeries
    label: str

    def __post_init__(self):
        if not self.label:
            raise ParseError(f"series {self.series.id!r}: empty label")


@dataclass
class Dataset:
    """Ordered collection of labeled series sharing one feature dimension.

    `classes` lists each distinct label once, in order of first appearance.
    An empty dataset (dim 0) is representable; operations that need data
    reject it explicitly.
    """

    items: list[LabeledSeries] = field(default_factory=list)
    dim: int = 0
    classes: list[str] = field(default_factory=list)

    @classmethod
    def from_items(cls, items) -> "Dataset":
        items = list(items)
        if not items:
            return cls([], 0, [])
        dim = items[0].series.dim
        classes = []
        for it in items:
            if it.series.dim != dim:
                raise DimMismatchError(
                    f"series {it.series.id!r} has dim {it.series.dim}, expected {dim}"
                )
            if it.label not in classes:
                classes.append(it.label)
        return cls(items, dim, classes)

    def __len__(self) -> int:
        return len(self.items)

    def labels(self) -> list[str]:
        return [it.label for it in self.items]

    def series_list(self) -> list[TimeSeries]:
        return [it.series for it in self.items]

    def subset(self, indices) -> "Dataset":
        return Dataset.from_items([self.items[i] for i in indices])


def normalize_series(raw, id: str) -> TimeSeries:
    """Scale every time moment of `raw` to unit L2 norm.

    Raises ZeroTimeStepError if any row has norm below 1e-12 (such a row
    cannot be normalized and silently dropping it would corrupt alignment
    lengths), NonFiniteError on NaN/inf input.
    """
    v = np.asarray(raw, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
        raise DimMismatchError(f"series {id!r}: values must be a non-empty t x d matrix")
    if not np.all(np.isfinite(v)):
        raise NonFiniteError(f"series {id!r} contains non-finite values")
    norms = np.linalg.norm(v, axis=1)
    small = norms < ZERO_NORM_TOL
    if np.any(small):
        t = int(np.argmax(small))
        raise ZeroTimeStepError(
            f"series {id!r}: time moment {t} has L2 norm {norms[t]:.3e} < {ZERO_NORM_TOL}"
        )
    return TimeSeries(id, v / norms[:, None])


def _parse_record(obj, line: int) -> tuple[str, str, np.ndarray]:
    if not isinstance(obj, dict):
        raise ParseError("record is not a JSON object", line)
    for key in ("id", "label", "values"):
        if key not in obj:
            raise ParseError(f"missing key {key!r}", line)
    sid, label, values = obj["id"], obj["label"], obj["values"]
    if not isinstance(sid, str):
        raise ParseError("'id' must be a string", line)
    if not isinstance(label, str) or not label:
        raise ParseError("'label' must be a non-empty string", line)
    try:
        v = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"'values' is not a numeric matrix: {exc}", line) from exc
    if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
        raise ParseError("'values' must be a non-empty t x d matrix", line)
    if not np.all(np.isfinite(v)):
        raise NonFiniteError(f"line {line}: 'values' contains non-finite entries")
    return sid, label, v


def load_dataset(path, normalize: bool = False) -> Dataset:
    """Read a JSON Lines dataset file.

    Items keep file order; the feature dimension is inferred from the first
    record and enforced for the rest (DimMismatchError names the offending
    line).  With `normalize`, every series goes through `normalize_series`.
    """
    items = []
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, text in enumerate(fh, start=1):
            text = text.strip()
            if not text:
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", lineno) from exc
            sid, label, v = _parse_record(obj, lineno)
            if dim is None:
                dim = v.shape[1]
            elif v.shape[1] != dim:
                raise DimMismatchError(
                    f"line {lineno}: series {sid!r} has dim {v.shape[1]}, expected {dim}"
                )
            series = normalize_series(v, sid) if normalize else TimeSeries(sid, v)
            items.append(LabeledSeries(series, label))
    return Dataset.from_items(items)


def save_dataset(ds: Dataset, path) -> None:
    """Write `ds` in the JSON Lines format `load_dataset` reads.

    Floats are emitted with their shortest round-trip decimal form, so
    load -> save -> load reproduces the exact 64-bit values.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for it in ds.items:
            rec = {
                "id": it.series.id,
                "label": it.label,
                "values": it.series.values.tolist(),
            }
            fh.write(json.dumps(rec) + "\n")


def split_dataset(ds: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified train/test split, deterministic for a given seed.

    Every class contributes ceil(train_fraction * count) items to the train
    side; both sides preserve the original item order.
    """
    if len(ds) == 0:
        raise EmptyDatasetError("cannot split an empty dataset")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    labels = ds.labels()
    for cls in ds.classes:
        idx = [i for i, lab in enumerate(labels) if lab == cls]
        take = math.ceil(train_fraction * len(idx))
        perm = rng.permutation(len(idx))
        chosen = {idx[j] for j in perm[:take]}
        train_idx.extend(i for i in idx if i in chosen)
        test_idx.extend(i for i in idx if i not in chosen)
    return ds.subset(sorted(train_idx)), ds.subset(sorted(test_idx))

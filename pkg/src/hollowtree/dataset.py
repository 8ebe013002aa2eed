"""Tabular datasets: CSV loading, binarization, stratified folds and synthetic data."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "Dataset",
    "DatasetError",
    "FoldPlan",
    "load_csv",
    "write_csv",
    "load_iris",
    "load_iris_binary",
    "binarize",
    "stratified_kfold",
    "stratified_split",
    "make_planted_dataset",
]


class DatasetError(ValueError):
    """Raised for malformed or inconsistent tabular input."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix with names, labels and row identifiers.

    ``labels`` holds the raw label column until :func:`binarize` maps it to
    ``{0, 1}``; model fitting requires the binary form (see
    :meth:`require_binary`).
    """

    feature_names: tuple[str, ...]
    rows: np.ndarray
    labels: np.ndarray
    row_ids: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2:
            raise DatasetError(f"rows must be 2-dimensional, got shape {rows.shape}")
        n, k = rows.shape
        names = tuple(str(s) for s in self.feature_names)
        if len(names) != k:
            raise DatasetError(f"{len(names)} feature names for {k} columns")
        if len(set(names)) != k:
            dupes = sorted({s for s in names if names.count(s) > 1})
            raise DatasetError(f"duplicate feature names: {dupes}")
        if not np.all(np.isfinite(rows)):
            r, c = np.argwhere(~np.isfinite(rows))[0]
            raise DatasetError(f"non-finite value at row {r}, column {names[c]!r}")
        labels = np.asarray(self.labels)
        if labels.shape != (n,):
            raise DatasetError(f"expected {n} labels, got shape {labels.shape}")
        row_ids = np.arange(n) if self.row_ids is None else np.asarray(self.row_ids)
        if row_ids.shape != (n,):
            raise DatasetError(f"expected {n} row ids, got shape {row_ids.shape}")
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "rows", _frozen(rows))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "row_ids", _frozen(row_ids))

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return self.rows.shape[1]

    @property
    def is_binary(self) -> bool:
        if self.labels.dtype.kind not in "iub":
            return False
        values = set(np.unique(self.labels).tolist())
        return values == {0, 1}

    def require_binary(self) -> Dataset:
        """Return ``self`` if labels are ``{0, 1}`` with both classes present."""
        if not self.is_binary:
            found = sorted(set(map(str, np.unique(self.labels))))
            raise DatasetError(f"labels must be binary 0/1 with both classes present, found {found}")
        return self

    def subset(self, index) -> Dataset:
        index = np.asarray(index)
        return Dataset(self.feature_names, self.rows[index], self.labels[index], self.row_ids[index])

    def with_rows(self, rows: np.ndarray) -> Dataset:
        return Dataset(self.feature_names, rows, self.labels, self.row_ids)

    def with_labels(self, labels: np.ndarray) -> Dataset:
        return Dataset(self.feature_names, self.rows, labels, self.row_ids)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.feature_names == other.feature_names
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.labels.astype(str), other.labels.astype(str))
            and np.array_equal(self.row_ids.astype(str), other.row_ids.astype(str))
        )

    __hash__ = None  # type: ignore[assignment]


def _coerce_labels(raw: list[str]) -> np.ndarray:
    try:
        as_int = [int(v) for v in raw]
    except ValueError:
        return np.array(raw, dtype=object)
    return np.array(as_int, dtype=int)


def load_csv(path, label_column: str, id_column: str | None = None) -> Dataset:
    """Read a header-first CSV; every column except the label (and id) is a feature.

    Cells are parsed with ``float``; errors carry the 1-based file line and the
    column name.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such data file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file, header row required") from None
        if label_column not in header:
            raise DatasetError(f"{path}: label column {label_column!r} not in header {header}")
        if id_column is not None and id_column not in header:
            raise DatasetError(f"{path}: id column {id_column!r} not in header {header}")
        label_at = header.index(label_column)
        id_at = header.index(id_column) if id_column is not None else None
        feat_at = [i for i in range(len(header)) if i not in (label_at, id_at)]
        rows, labels, ids = [], [], []
        for line_no, record in enumerate(reader, start=2):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(header):
                raise DatasetError(
                    f"{path}:{line_no}: expected {len(header)} cells, found {len(record)}"
                )
            values = []
            for i in feat_at:
                cell = record[i].strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise DatasetError(
                        f"{path}:{line_no}: column {header[i]!r}: cannot parse {cell!r} as a number"
                    ) from None
                if not math.isfinite(v):
                    raise DatasetError(
                        f"{path}:{line_no}: column {header[i]!r}: non-finite value {cell!r}"
                    )
                values.append(v)
            rows.append(values)
            labels.append(record[label_at].strip())
            ids.append(record[id_at].strip() if id_at is not None else str(len(ids)))
    if len(rows) < 2:
        raise DatasetError(f"{path}: fewer than 2 rows")
    row_ids = np.arange(len(rows)) if id_column is None else np.array(ids, dtype=object)
    return Dataset(
        tuple(header[i] for i in feat_at),
        np.array(rows, dtype=float).reshape(len(rows), len(feat_at)),
        _coerce_labels(labels),
        row_ids,
    )


def write_csv(ds: Dataset, path, label_column: str = "label") -> None:
    """Write ``ds`` so that ``load_csv(path, label_column)`` reproduces it exactly."""
    if label_column in ds.feature_names:
        raise DatasetError(f"label column {label_column!r} collides with a feature name")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*ds.feature_names, label_column])
        for row, label in zip(ds.rows, ds.labels):
            # repr() of a float round-trips exactly through float()
            writer.writerow([repr(float(v)) for v in row] + [str(label)])


def load_iris() -> Dataset:
    """Fisher's three-class Iris data, bundled with the package."""
    ref = resources.files("hollowtree") / "data" / "iris.csv"
    with resources.as_file(ref) as path:
        return load_csv(path, "species")


def load_iris_binary() -> Dataset:
    """Iris without setosa; virginica is the positive class, versicolor the negative."""
    return binarize(load_iris(), positive="virginica", negative="versicolor")


def binarize(ds: Dataset, positive, negative) -> Dataset:
    """Keep only rows labelled ``positive`` or ``negative`` and map them to 1 and 0."""
    raw = ds.labels.astype(str)
    pos, neg = str(positive), str(negative)
    if pos == neg:
        raise DatasetError(f"positive and negative labels are both {pos!r}")
    present = set(raw.tolist())
    for lab in (pos, neg):
        if lab not in present:
            raise DatasetError(f"label {lab!r} absent from data (found {sorted(present)})")
    keep = np.flatnonzero((raw == pos) | (raw == neg))
    out = ds.subset(keep)
    return out.with_labels((raw[keep] == pos).astype(int))


@dataclass(frozen=True, eq=False)
class FoldPlan:
    """Assignment of every row to one of ``k`` folds."""

    k: int
    assignments: np.ndarray
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "assignments", _frozen(np.asarray(self.assignments, dtype=int)))

    def test_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def split(self):
        for fold in range(self.k):
            yield self.train_index(fold), self.test_index(fold)

    def __eq__(self, other):
        if not isinstance(other, FoldPlan):
            return NotImplemented
        return (self.k, self.seed) == (other.k, other.seed) and np.array_equal(
            self.assignments, other.assignments
        )

    __hash__ = None  # type: ignore[assignment]


def stratified_kfold(ds: Dataset, k: int, seed: int) -> FoldPlan:
    """Shuffle each class with ``seed`` and deal its rows round-robin over ``k`` folds."""
    if k < 2:
        raise DatasetError(f"k must be at least 2, got {k}")
    labels = ds.labels.astype(str)
    classes, counts = np.unique(labels, return_counts=True)
    if np.any(counts < k):
        small = classes[np.argmin(counts)]
        raise DatasetError(f"class {small!r} has {counts.min()} rows, fewer than k={k}")
    rng = np.random.default_rng(seed)
    assignments = np.empty(ds.n_rows, dtype=int)
    offset = 0
    for cls in classes:
        members = rng.permutation(np.flatnonzero(labels == cls))
        # continue the deal where the previous class stopped, keeping fold sizes level
        assignments[members] = (np.arange(len(members)) + offset) % k
        offset = (offset + len(members)) % k
    return FoldPlan(k, assignments, seed)


def stratified_split(ds: Dataset, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffled train/test index split; returns ``(train, test)``."""
    if not 0.0 < test_fraction < 1.0:
        raise DatasetError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    labels = ds.labels.astype(str)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for cls in np.unique(labels):
        members = rng.permutation(np.flatnonzero(labels == cls))
        n_test = int(round(test_fraction * len(members)))
        if n_test == 0 or n_test == len(members):
            raise DatasetError(f"class {cls!r} too small for test_fraction={test_fraction}")
        test.append(members[:n_test])
        train.append(members[n_test:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def make_planted_dataset(
    n_rows: int,
    n_features: int,
    signal_features: Sequence[tuple[int, int]],
    noise_sd: float,
    seed: int,
) -> Dataset:
    """Synthetic data where only the listed features carry label signal.

    Labels are fair coin flips. A signal feature ``(j, s)`` equals
    ``s * label + N(0, noise_sd)``; every other column is standard normal noise.
    """
    if n_rows < 20:
        raise DatasetError(f"n_rows must be at least 20, got {n_rows}")
    if noise_sd < 0:
        raise DatasetError(f"noise_sd must be non-negative, got {noise_sd}")
    seen = set()
    for j, s in signal_features:
        if not 0 <= j < n_features:
            raise DatasetError(f"signal index {j} outside [0, {n_features})")
        if j in seen:
            raise DatasetError(f"duplicate signal index {j}")
        if s not in (-1, 1):
            raise DatasetError(f"signal sign must be +1 or -1, got {s}")
        seen.add(j)
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, size=n_rows)
    rows = rng.standard_normal((n_rows, n_features))
    for j, s in signal_features:
        rows[:, j] = s * labels + noise_sd * rng.standard_normal(n_rows)
    names = tuple(f"x{j}" for j in range(n_features))
    return Dataset(names, rows, labels)

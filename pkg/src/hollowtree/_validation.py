"""Input checks shared by models and estimators."""

from __future__ import annotations

import numpy as np


def as_rows(X, n_features: int | None = None) -> tuple[np.ndarray, bool]:
    """Coerce ``X`` to a finite 2-D float array.

    Returns the array and whether the input was a single 1-D feature vector,
    so callers can hand back a scalar in that case.
    """
    arr = np.asarray(X, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"expected a feature vector or 2-D matrix, got shape {np.shape(X)}")
    if n_features is not None and arr.shape[1] != n_features:
        raise ValueError(f"expected {n_features} features, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("input contains NaN or infinite values")
    return arr, single


def check_binary_labels(y) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError(f"labels must be 1-D, got shape {y.shape}")
    if y.dtype.kind == "b":
        y = y.astype(int)
    if y.dtype.kind not in "iuf" or not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    y = y.astype(np.int64)
    if y.min() == y.max():
        raise ValueError(f"both classes required, only class {int(y[0])} present")
    return y


def encode_classes(y) -> tuple[np.ndarray, np.ndarray]:
    """Map a two-valued label vector to 0/1 in sorted class order (sklearn convention)."""
    classes, encoded = np.unique(np.asarray(y), return_inverse=True)
    if len(classes) != 2:
        raise ValueError(f"binary classification needs exactly 2 classes, got {len(classes)}")
    return classes, encoded.astype(np.int64)

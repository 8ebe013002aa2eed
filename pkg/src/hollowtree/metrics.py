"""Binary classification metrics."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

__all__ = ["EvalMetrics", "accuracy", "roc_auc", "f1", "evaluate", "positive_proba"]


@dataclass(frozen=True)
class EvalMetrics:
    accuracy: float
    roc_auc: float
    f1: float

    def to_dict(self) -> dict:
        return asdict(self)


def accuracy(y_true, y_pred) -> float:
    return float(np.mean(np.asarray(y_true) == np.asarray(y_pred)))


def roc_auc(y_true, scores) -> float:
    """Mann-Whitney estimate of ROC AUC; tied scores count one half."""
    y = np.asarray(y_true).astype(bool)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC AUC needs both classes in y_true")
    ranks = rankdata(np.asarray(scores, dtype=float), method="average")
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def f1(y_true, y_pred) -> float:
    """F1 of the positive class; 0 when there are no true positives."""
    y = np.asarray(y_true).astype(bool)
    pred = np.asarray(y_pred).astype(bool)
    tp = np.count_nonzero(y & pred)
    if tp == 0:
        return 0.0
    precision = tp / np.count_nonzero(pred)
    recall = tp / np.count_nonzero(y)
    return float(2 * precision * recall / (precision + recall))


def positive_proba(model, X) -> np.ndarray:
    """Positive-class probabilities from a fitted model or estimator wrapper."""
    model = getattr(model, "model_", model)
    return np.asarray(model.predict_proba(X), dtype=float)


def evaluate(model, ds, threshold: float = 0.5) -> EvalMetrics:
    if ds.n_rows == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    p = positive_proba(model, ds.rows)
    pred = (p >= threshold).astype(int)
    return EvalMetrics(accuracy(ds.labels, pred), roc_auc(ds.labels, p), f1(ds.labels, pred))

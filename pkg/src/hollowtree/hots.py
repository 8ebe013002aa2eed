"""Directional, cross-validated feature importance for boosted trees (HOTS).

Per fold: fit on the training folds, decompose the held-out predictions,
keep only confident correct ones, average their contributions per predicted
class, then sign each feature by whether its training-fold mean is higher in
the positive or the negative class. Fold results are combined into
per-feature means and fold counts.

Weights are oriented toward the predicted class before signing: a
positive-class row contributes its margin contributions as they are, a
negative-class row contributes their negation (the log odds of class 0).
After signing, a weight reads as the change in that class's log odds as the
feature increases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator

from ._validation import as_rows, encode_classes
from .cart import DecisionTree
from .contributions import contributions_matrix
from .dataset import Dataset, DatasetError, FoldPlan, stratified_kfold
from .gbdt import BoostedModel, Hyperparams, fit_gbdt
from .metrics import accuracy

__all__ = [
    "REPORT_VERSION",
    "ClassSummary",
    "KeptRows",
    "HotsFoldResult",
    "HotsReport",
    "HotsExplainer",
    "filter_predictions",
    "aggregate_class_weights",
    "apply_directionality",
    "run_hots_cv",
]

REPORT_VERSION = "hollowtree-hots/1"
POSITIVE, NEGATIVE = "positive", "negative"


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ClassSummary:
    label: str
    mean_weight: np.ndarray
    n_predictions_kept: int

    def __post_init__(self):
        if self.label not in (POSITIVE, NEGATIVE):
            raise ValueError(f"label must be {POSITIVE!r} or {NEGATIVE!r}, got {self.label!r}")
        object.__setattr__(self, "mean_weight", _frozen(self.mean_weight))

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "mean_weight": self.mean_weight.tolist(),
            "n_predictions_kept": self.n_predictions_kept,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ClassSummary:
        return cls(d["label"], d["mean_weight"], int(d["n_predictions_kept"]))

    def __eq__(self, other):
        if not isinstance(other, ClassSummary):
            return NotImplemented
        return (self.label, self.n_predictions_kept) == (other.label, other.n_predictions_kept) and np.array_equal(
            self.mean_weight, other.mean_weight
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class KeptRows:
    """Row indices (into the evaluation set) surviving the confidence filter."""

    positive: np.ndarray
    negative: np.ndarray
    n_evaluated: int


def _margin_or_proba(model, X):
    """Return ``(predicted_class, confidence)`` with confidence ``max(p, 1 - p)``."""
    model = getattr(model, "model_", model)
    if isinstance(model, BoostedModel):
        m = model.predict_margin(X)
        # expit(|m|) is symmetric under label flips, unlike max(p, 1 - p) in floats
        return (m >= 0).astype(int), expit(np.abs(m))
    if isinstance(model, DecisionTree):
        p = model.predict_proba(X)
        return (p >= 0.5).astype(int), np.maximum(p, 1.0 - p)
    raise TypeError(f"unsupported model type {type(model).__name__}")


def filter_predictions(model, ds_eval: Dataset, threshold: float = 0.70) -> KeptRows:
    """Keep rows predicted correctly with confidence at least ``threshold``."""
    if ds_eval.n_rows == 0:
        raise ValueError("cannot filter an empty evaluation set")
    arr, _ = as_rows(ds_eval.rows)
    pred, conf = _margin_or_proba(model, arr)
    keep = (pred == ds_eval.labels) & (conf >= threshold)
    return KeptRows(
        np.flatnonzero(keep & (pred == 1)),
        np.flatnonzero(keep & (pred == 0)),
        ds_eval.n_rows,
    )


def aggregate_class_weights(model, ds_eval: Dataset, rows, label: str) -> ClassSummary:
    """Mean bias-free contribution per kept prediction of one class.

    Negative-class contributions are negated so both classes are expressed as
    log odds (or probability, for a single tree) of the class predicted.
    """
    rows = np.asarray(rows, dtype=int)
    k = ds_eval.n_features
    if rows.size == 0:
        return ClassSummary(label, np.zeros(k), 0)
    _, contrib, _ = contributions_matrix(model, ds_eval.rows[rows])
    mean = contrib.sum(axis=0) / rows.size
    if label == NEGATIVE:
        mean = -mean
    elif label != POSITIVE:
        raise ValueError(f"label must be {POSITIVE!r} or {NEGATIVE!r}, got {label!r}")
    return ClassSummary(label, mean, int(rows.size))


def class_mean_signs(ds_reference: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature sign of (positive-class mean - negative-class mean); ties give +1.

    Returns the signs and a boolean mask of the tied features.
    """
    y = ds_reference.labels
    if not ds_reference.is_binary:
        raise DatasetError("reference set must contain both classes with 0/1 labels")
    diff = ds_reference.rows[y == 1].mean(axis=0) - ds_reference.rows[y == 0].mean(axis=0)
    tied = diff == 0
    return np.where(diff < 0, -1.0, 1.0), tied


def apply_directionality(
    pos: ClassSummary, neg: ClassSummary, ds_reference: Dataset
) -> tuple[ClassSummary, ClassSummary, np.ndarray]:
    """Sign both class summaries by the class-mean comparison on ``ds_reference``.

    Returns ``(positive, negative, tied_features)``; ``tied_features`` lists
    the indices whose class means were equal and took the +1 default.
    """
    s, tied = class_mean_signs(ds_reference)
    return (
        ClassSummary(pos.label, pos.mean_weight * s, pos.n_predictions_kept),
        ClassSummary(neg.label, neg.mean_weight * -s, neg.n_predictions_kept),
        np.flatnonzero(tied),
    )


@dataclass(frozen=True, eq=False)
class HotsFoldResult:
    fold_index: int
    positive: ClassSummary
    negative: ClassSummary
    features_used: tuple[int, ...]
    accuracy: float
    sign_ties: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "fold_index": self.fold_index,
            "positive": self.positive.to_dict(),
            "negative": self.negative.to_dict(),
            "features_used": list(self.features_used),
            "accuracy": self.accuracy,
            "sign_ties": list(self.sign_ties),
        }

    @classmethod
    def from_dict(cls, d: dict) -> HotsFoldResult:
        return cls(
            int(d["fold_index"]),
            ClassSummary.from_dict(d["positive"]),
            ClassSummary.from_dict(d["negative"]),
            tuple(int(j) for j in d["features_used"]),
            float(d["accuracy"]),
            tuple(int(j) for j in d.get("sign_ties", ())),
        )

    def __eq__(self, other):
        if not isinstance(other, HotsFoldResult):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class HotsReport:
    """Cross-fold HOTS result.

    ``positive_weights[k]`` and ``negative_weights[k]`` average only the folds
    in which feature ``k`` was used; ``fold_counts[k]`` counts those folds.
    """

    feature_names: tuple[str, ...]
    positive_weights: np.ndarray
    negative_weights: np.ndarray
    fold_counts: np.ndarray
    folds: tuple[HotsFoldResult, ...]
    config: dict = field(default_factory=dict)
    version: str = REPORT_VERSION

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "positive_weights", _frozen(self.positive_weights))
        object.__setattr__(self, "negative_weights", _frozen(self.negative_weights))
        object.__setattr__(self, "fold_counts", _frozen(self.fold_counts, int))
        object.__setattr__(self, "folds", tuple(self.folds))

    @property
    def fold_accuracies(self) -> np.ndarray:
        return np.array([f.accuracy for f in self.folds])

    @property
    def mean_accuracy(self) -> float:
        return float(self.fold_accuracies.mean()) if self.folds else float("nan")

    @property
    def sign_ties(self) -> tuple[int, ...]:
        return tuple(sorted({j for f in self.folds for j in f.sign_ties}))

    def weights(self, label: str) -> np.ndarray:
        return {POSITIVE: self.positive_weights, NEGATIVE: self.negative_weights}[label]

    def top_features(self, label: str, n: int | None = None) -> list[int]:
        """Feature indices by descending ``|weight|`` in one class, ties by index."""
        w = self.weights(label)
        order = sorted(range(len(w)), key=lambda j: (-abs(w[j]), j))
        return order if n is None else order[:n]

    @classmethod
    def from_folds(cls, feature_names, folds, config=None) -> HotsReport:
        k = len(feature_names)
        pos_sum, neg_sum = np.zeros(k), np.zeros(k)
        counts = np.zeros(k, dtype=int)
        for fr in folds:
            used = np.asarray(fr.features_used, dtype=int)
            pos_sum[used] += fr.positive.mean_weight[used]
            neg_sum[used] += fr.negative.mean_weight[used]
            counts[used] += 1
        denom = np.maximum(counts, 1)
        return cls(tuple(feature_names), pos_sum / denom, neg_sum / denom, counts, tuple(folds), dict(config or {}))

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "config": self.config,
            "feature_names": list(self.feature_names),
            "positive_weights": self.positive_weights.tolist(),
            "negative_weights": self.negative_weights.tolist(),
            "fold_counts": self.fold_counts.tolist(),
            "fold_accuracies": self.fold_accuracies.tolist(),
            "mean_accuracy": self.mean_accuracy if self.folds else None,
            "sign_ties": list(self.sign_ties),
            "folds": [f.to_dict() for f in self.folds],
        }

    @classmethod
    def from_dict(cls, d: dict) -> HotsReport:
        return cls(
            tuple(d["feature_names"]),
            d["positive_weights"],
            d["negative_weights"],
            d["fold_counts"],
            tuple(HotsFoldResult.from_dict(f) for f in d["folds"]),
            dict(d.get("config", {})),
            d.get("version", REPORT_VERSION),
        )

    def __eq__(self, other):
        if not isinstance(other, HotsReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None  # type: ignore[assignment]


def hots_fold(model, ds_train: Dataset, ds_eval: Dataset, threshold: float, fold_index: int = 0) -> HotsFoldResult:
    """One fold of the procedure given an already fitted model."""
    kept = filter_predictions(model, ds_eval, threshold)
    pos = aggregate_class_weights(model, ds_eval, kept.positive, POSITIVE)
    neg = aggregate_class_weights(model, ds_eval, kept.negative, NEGATIVE)
    pos, neg, tied = apply_directionality(pos, neg, ds_train)
    used = np.flatnonzero((pos.mean_weight != 0) | (neg.mean_weight != 0))
    pred, _ = _margin_or_proba(model, ds_eval.rows)
    return HotsFoldResult(
        fold_index,
        pos,
        neg,
        tuple(int(j) for j in used),
        accuracy(ds_eval.labels, pred),
        tuple(int(j) for j in tied),
    )


def run_hots_cv(
    ds: Dataset,
    hp: Hyperparams | None = None,
    k: int = 5,
    threshold: float = 0.70,
    seed: int = 0,
    plan: FoldPlan | None = None,
) -> HotsReport:
    """Run HOTS over a seeded stratified ``k``-fold plan of ``ds``.

    Contributions are taken on each held-out fold; the class-mean signs come
    from the matching training folds. An explicit ``plan`` overrides ``k`` and
    ``seed`` for fold assignment.
    """
    hp = hp or Hyperparams()
    ds.require_binary()
    if plan is None:
        plan = stratified_kfold(ds, k, seed)
    elif len(plan.assignments) != ds.n_rows:
        raise ValueError(f"fold plan covers {len(plan.assignments)} rows, dataset has {ds.n_rows}")
    k, seed = plan.k, plan.seed
    folds = []
    for i, (train, test) in enumerate(plan.split()):
        ds_train, ds_test = ds.subset(train), ds.subset(test)
        model = fit_gbdt(ds_train, hp)
        folds.append(hots_fold(model, ds_train, ds_test, threshold, i))
    config = {"k": k, "threshold": threshold, "seed": seed, "hyperparams": hp.to_dict()}
    return HotsReport.from_folds(ds.feature_names, folds, config)


class HotsExplainer(BaseEstimator):
    """Estimator-style front end: ``fit(X, y)`` runs the cross-validated procedure.

    Fitted attributes: ``report_``, ``positive_weights_``, ``negative_weights_``
    and ``fold_counts_``. The larger of the two sorted class labels is treated
    as positive.
    """

    def __init__(
        self,
        n_folds=5,
        threshold=0.70,
        seed=0,
        n_rounds=100,
        learning_rate=0.3,
        max_depth=6,
        reg_lambda=1.0,
        base_score=0.5,
    ):
        self.n_folds = n_folds
        self.threshold = threshold
        self.seed = seed
        self.n_rounds = n_rounds
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.reg_lambda = reg_lambda
        self.base_score = base_score

    def fit(self, X, y, feature_names=None):
        X, _ = as_rows(X)
        self.classes_, y01 = encode_classes(y)
        names = feature_names if feature_names is not None else [f"x{j}" for j in range(X.shape[1])]
        hp = Hyperparams(self.n_rounds, self.learning_rate, self.max_depth, self.reg_lambda, self.base_score)
        self.report_ = run_hots_cv(Dataset(names, X, y01), hp, self.n_folds, self.threshold, self.seed)
        self.positive_weights_ = self.report_.positive_weights
        self.negative_weights_ = self.report_.negative_weights
        self.fold_counts_ = self.report_.fold_counts
        self.n_features_in_ = X.shape[1]
        return self

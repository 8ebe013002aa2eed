"""Newton-boosted binary classifier over regression trees in log-odds space."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit, logit
from sklearn.base import BaseEstimator, ClassifierMixin

from . import _splitter
from ._validation import as_rows, encode_classes
from .cart import Tree, grow_tree
from .dataset import Dataset

__all__ = [
    "Hyperparams",
    "BoostedModel",
    "GradientBoostedClassifier",
    "fit_gbdt",
    "predict_margin",
    "predict_proba",
    "logistic_loss",
]


@dataclass(frozen=True)
class Hyperparams:
    n_rounds: int = 100
    learning_rate: float = 0.3
    max_depth: int = 6
    reg_lambda: float = 1.0
    base_score: float = 0.5

    def __post_init__(self):
        if self.n_rounds < 0:
            raise ValueError(f"n_rounds must be non-negative, got {self.n_rounds}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.max_depth < 0:
            raise ValueError(f"max_depth must be non-negative, got {self.max_depth}")
        if self.reg_lambda < 0:
            raise ValueError(f"reg_lambda must be non-negative, got {self.reg_lambda}")
        if not 0.0 < self.base_score < 1.0:
            raise ValueError(f"base_score must lie in (0, 1), got {self.base_score}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class BoostedModel:
    """Ordered regression trees whose leaf values already include the learning rate.

    Each tree's internal node values are sample-weighted means of its leaves,
    so a tree's root value is its average output over the training rows.
    """

    trees: tuple[Tree, ...]
    base_margin: float
    feature_names: tuple[str, ...]
    hyperparams: Hyperparams = field(default_factory=Hyperparams)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def _margin(self, X: np.ndarray) -> np.ndarray:
        margin = np.full(len(X), self.base_margin)
        for tree in self.trees:
            margin += tree.predict(X)
        return margin

    def predict_margin(self, X):
        arr, single = as_rows(X, self.n_features)
        m = self._margin(arr)
        return float(m[0]) if single else m

    def predict_proba(self, X):
        """Positive-class probability ``sigmoid(margin)``."""
        arr, single = as_rows(X, self.n_features)
        p = expit(self._margin(arr))
        return float(p[0]) if single else p

    def predict(self, X):
        m = self.predict_margin(X)
        return (np.asarray(m) >= 0).astype(int) if np.ndim(m) else int(m >= 0)

    def staged_margin(self, X):
        """Yield the margin after 0, 1, ..., n_rounds trees."""
        arr, _ = as_rows(X, self.n_features)
        margin = np.full(len(arr), self.base_margin)
        yield margin.copy()
        for tree in self.trees:
            margin += tree.predict(arr)
            yield margin.copy()

    def to_dict(self) -> dict:
        return {
            "model": "boosted",
            "base_score": float(expit(self.base_margin)),
            "base_margin": self.base_margin,
            "learning_rate": self.hyperparams.learning_rate,
            "hyperparams": self.hyperparams.to_dict(),
            "feature_names": list(self.feature_names),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, data: dict) -> BoostedModel:
        if data.get("model") != "boosted":
            raise ValueError(f"not a boosted model document: model={data.get('model')!r}")
        hp = Hyperparams(**data["hyperparams"]) if "hyperparams" in data else Hyperparams(
            learning_rate=data["learning_rate"], base_score=data["base_score"]
        )
        base_margin = data.get("base_margin", float(logit(data["base_score"])))
        return cls(
            tuple(Tree.from_dict(t) for t in data["trees"]),
            float(base_margin),
            tuple(data["feature_names"]),
            hp,
        )


def _gradients(margin: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = expit(margin)
    q = expit(-margin)
    # g = p - y written so that flipping y and negating margin negates g exactly
    g = np.where(y == 1, -q, p)
    return g, p * q


def fit_gbdt(ds: Dataset, hp: Hyperparams | None = None) -> BoostedModel:
    """Boost ``hp.n_rounds`` trees with exact greedy Newton splits.

    Each round grows a tree on the logistic-loss gradients and hessians of the
    current margins, maximizing the regularized structure-score gain, and
    sets leaf weights ``-learning_rate * G / (H + reg_lambda)``. No row or
    column subsampling, so a fit is deterministic.
    """
    hp = hp or Hyperparams()
    ds.require_binary()
    X = np.ascontiguousarray(ds.rows, dtype=float)
    y = ds.labels.astype(np.int64)
    order = _splitter.presort(X)
    base_margin = float(logit(hp.base_score))
    margin = np.full(len(y), base_margin)
    trees = []
    for _ in range(hp.n_rounds):
        g, h = _gradients(margin, y)

        def find_split(o, g=g, h=h):
            return _splitter.best_newton_split(X, g, h, o, hp.reg_lambda)

        def leaf_weight(rows, g=g, h=h):
            return -hp.learning_rate * float(np.sum(g[rows])) / (float(np.sum(h[rows])) + hp.reg_lambda)

        tree = grow_tree(X, order, hp.max_depth, find_split, leaf_weight)
        margin = margin + tree.predict(X)
        trees.append(tree)
    return BoostedModel(tuple(trees), base_margin, ds.feature_names, hp)


def predict_margin(m: BoostedModel, x):
    return m.predict_margin(x)


def predict_proba(m: BoostedModel, x):
    return m.predict_proba(x)


def logistic_loss(margin: np.ndarray, y: np.ndarray) -> float:
    """Mean negative log-likelihood of 0/1 labels under ``sigmoid(margin)``."""
    margin = np.asarray(margin, dtype=float)
    signed = np.where(np.asarray(y) == 1, margin, -margin)
    return float(np.mean(np.logaddexp(0.0, -signed)))


class GradientBoostedClassifier(ClassifierMixin, BaseEstimator):
    """Estimator wrapper around :func:`fit_gbdt`; defaults mirror :class:`Hyperparams`."""

    def __init__(self, n_rounds=100, learning_rate=0.3, max_depth=6, reg_lambda=1.0, base_score=0.5):
        self.n_rounds = n_rounds
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.reg_lambda = reg_lambda
        self.base_score = base_score

    def _hyperparams(self) -> Hyperparams:
        return Hyperparams(self.n_rounds, self.learning_rate, self.max_depth, self.reg_lambda, self.base_score)

    def fit(self, X, y, feature_names=None):
        X, _ = as_rows(X)
        self.classes_, y01 = encode_classes(y)
        names = feature_names if feature_names is not None else [f"x{j}" for j in range(X.shape[1])]
        self.model_ = fit_gbdt(Dataset(names, X, y01), self._hyperparams())
        self.n_features_in_ = X.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError(f"{type(self).__name__} is not fitted yet; call fit first")

    def decision_function(self, X):
        self._check_fitted()
        return self.model_.predict_margin(as_rows(X, self.n_features_in_)[0])

    def predict_proba(self, X):
        p = expit(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        margin = self.decision_function(X)
        return self.classes_[(margin >= 0).astype(int)]

    @property
    def feature_importances_(self):
        from .importance import gini_importance

        self._check_fitted()
        return gini_importance(self.model_).scores


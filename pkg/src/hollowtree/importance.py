"""Baseline global importance measures: split gain, permutation and partial dependence."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cart import DecisionTree
from .dataset import Dataset
from .gbdt import BoostedModel
from .metrics import accuracy, positive_proba

__all__ = [
    "ImportanceTable",
    "PdpCurve",
    "PdpSurface",
    "gini_importance",
    "permutation_importance",
    "pdp_1d",
    "pdp_2d",
    "pdp_grid",
]


@dataclass(frozen=True, eq=False)
class ImportanceTable:
    method: str
    scores: np.ndarray
    feature_names: tuple[str, ...]
    repeats: int = 0
    seed: int | None = None
    # per-repeat accuracy drops, shape (K, repeats); permutation only
    raw: np.ndarray | None = field(default=None, repr=False)

    def ranking(self) -> list[int]:
        """Feature indices by descending score, ties by index."""
        return sorted(range(len(self.scores)), key=lambda j: (-self.scores[j], j))

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "feature_names": list(self.feature_names),
            "scores": [float(s) for s in self.scores],
        }
        if self.method == "permutation":
            out.update(repeats=self.repeats, seed=self.seed)
            if self.raw is not None:
                out["std"] = [float(s) for s in self.raw.std(axis=1)]
        return out


@dataclass(frozen=True, eq=False)
class PdpCurve:
    feature: int
    feature_name: str
    grid: np.ndarray
    mean_prediction: np.ndarray

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "feature_name": self.feature_name,
            "grid": self.grid.tolist(),
            "mean_prediction": self.mean_prediction.tolist(),
        }


@dataclass(frozen=True, eq=False)
class PdpSurface:
    features: tuple[int, int]
    feature_names: tuple[str, str]
    grid_1: np.ndarray
    grid_2: np.ndarray
    # mean_prediction[a, b] is the average at (grid_1[a], grid_2[b])
    mean_prediction: np.ndarray

    def to_dict(self) -> dict:
        return {
            "features": list(self.features),
            "feature_names": list(self.feature_names),
            "grid_1": self.grid_1.tolist(),
            "grid_2": self.grid_2.tolist(),
            "mean_prediction": self.mean_prediction.tolist(),
        }


def _unwrap(model):
    return getattr(model, "model_", model)


def gini_importance(model) -> ImportanceTable:
    """Normalized split-gain totals per feature.

    Classification trees credit ``n_samples * impurity_decrease`` at each
    split; boosted trees credit the Newton gain of each split, summed over all
    trees. A model without splits yields all zeros.
    """
    model = _unwrap(model)
    if isinstance(model, DecisionTree):
        trees = [model.tree]
        method = "gini"
    elif isinstance(model, BoostedModel):
        trees = list(model.trees)
        method = "gain"
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    totals = np.zeros(model.n_features)
    for tree in trees:
        internal = tree.feature >= 0
        np.add.at(totals, tree.feature[internal], tree.gain[internal])
    s = totals.sum()
    scores = totals / s if s > 0 else totals
    return ImportanceTable(method, scores, model.feature_names)


def permutation_importance(model, ds: Dataset, repeats: int = 30, seed: int = 0) -> ImportanceTable:
    """Mean accuracy drop when one column at a time is shuffled.

    Each ``(feature, repeat)`` pair draws its permutation from its own child
    of ``SeedSequence(seed)``, so results do not depend on evaluation order.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be at least 1, got {repeats}")
    if ds.n_rows == 0:
        raise ValueError("permutation importance needs a nonempty dataset")
    X = np.array(ds.rows, dtype=float)
    y = ds.labels
    baseline = accuracy(y, positive_proba(model, X) >= 0.5)
    k = ds.n_features
    children = np.random.SeedSequence(seed).spawn(k * repeats)
    drops = np.zeros((k, repeats))
    for j in range(k):
        original = X[:, j].copy()
        for r in range(repeats):
            rng = np.random.default_rng(children[j * repeats + r])
            X[:, j] = original[rng.permutation(len(original))]
            drops[j, r] = baseline - accuracy(y, positive_proba(model, X) >= 0.5)
        X[:, j] = original
    return ImportanceTable("permutation", drops.mean(axis=1), ds.feature_names, repeats, seed, drops)


def pdp_grid(values: np.ndarray, grid_size: int) -> np.ndarray:
    """Quantile-spaced, strictly increasing grid over the observed range."""
    if grid_size < 2:
        raise ValueError(f"grid_size must be at least 2, got {grid_size}")
    values = np.asarray(values, dtype=float)
    return np.unique(np.quantile(values, np.linspace(0.0, 1.0, grid_size)))


def _feature_index(ds: Dataset, feature) -> int:
    if isinstance(feature, str):
        if feature not in ds.feature_names:
            raise ValueError(f"unknown feature {feature!r}")
        return ds.feature_names.index(feature)
    j = int(feature)
    if not 0 <= j < ds.n_features:
        raise ValueError(f"feature index {j} outside [0, {ds.n_features})")
    return j


def pdp_1d(model, ds: Dataset, feature, grid_size: int = 50, grid=None) -> PdpCurve:
    """Average predicted probability with the column fixed at each grid value.

    ``grid`` overrides the quantile grid. A constant column gives a one-point
    curve.
    """
    j = _feature_index(ds, feature)
    grid = pdp_grid(ds.rows[:, j], grid_size) if grid is None else np.unique(np.asarray(grid, dtype=float))
    X = np.array(ds.rows, dtype=float)
    means = np.empty(len(grid))
    for a, v in enumerate(grid):
        X[:, j] = v
        means[a] = positive_proba(model, X).mean()
    return PdpCurve(j, ds.feature_names[j], grid, means)


def pdp_2d(model, ds: Dataset, f1, f2, grid_size: int = 50) -> PdpSurface:
    j1, j2 = _feature_index(ds, f1), _feature_index(ds, f2)
    if j1 == j2:
        raise ValueError("pdp_2d needs two distinct features")
    g1 = pdp_grid(ds.rows[:, j1], grid_size)
    g2 = pdp_grid(ds.rows[:, j2], grid_size)
    X = np.array(ds.rows, dtype=float)
    surface = np.empty((len(g1), len(g2)))
    for a, v1 in enumerate(g1):
        X[:, j1] = v1
        for b, v2 in enumerate(g2):
            X[:, j2] = v2
            surface[a, b] = positive_proba(model, X).mean()
    return PdpSurface((j1, j2), (ds.feature_names[j1], ds.feature_names[j2]), g1, g2, surface)

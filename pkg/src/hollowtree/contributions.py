"""Additive per-feature decomposition of tree and boosted-model predictions.

Walking a row down a tree, each step from a parent to a child credits the
parent's split feature with ``child.value - parent.value``. The root value is
the bias, so ``bias + sum(contributions)`` telescopes to the leaf value. For a
boosted model the per-tree pieces add up in log-odds (margin) space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import as_rows
from .cart import DecisionTree, Tree
from .gbdt import BoostedModel

__all__ = [
    "ContributionVector",
    "ExplanationRow",
    "tree_contributions",
    "ensemble_contributions",
    "contributions_matrix",
    "explain_prediction",
]

PROBABILITY = "probability"
LOG_ODDS = "log_odds"


@dataclass(frozen=True, eq=False)
class ContributionVector:
    bias: float
    contributions: np.ndarray
    prediction: float
    space: str
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        c = np.array(self.contributions, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "contributions", c)

    @property
    def residual(self) -> float:
        """``bias + sum(contributions) - prediction``; zero up to rounding."""
        return self.bias + float(self.contributions.sum()) - self.prediction

    def __eq__(self, other):
        if not isinstance(other, ContributionVector):
            return NotImplemented
        return (
            (self.bias, self.prediction, self.space) == (other.bias, other.prediction, other.space)
            and np.array_equal(self.contributions, other.contributions)
        )

    __hash__ = None  # type: ignore[assignment]


def _tree_pieces(tree: Tree, X: np.ndarray, out: np.ndarray) -> np.ndarray:
    """Accumulate path increments of ``tree`` into ``out`` (n, K); return leaf values."""
    node = np.zeros(len(X), dtype=np.int64)
    active = np.flatnonzero(tree.feature[node] >= 0)
    while active.size:
        cur = node[active]
        f = tree.feature[cur]
        go_left = X[active, f] <= tree.threshold[cur]
        child = np.where(go_left, tree.left[cur], tree.right[cur])
        # (row, feature) pairs are unique within one step, so plain fancy-index add is safe
        out[active, f] += tree.value[child] - tree.value[cur]
        node[active] = child
        active = active[tree.feature[child] >= 0]
    return tree.value[node]


def contributions_matrix(model, X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized decomposition of many rows.

    Returns ``(bias, contributions, prediction)`` with shapes ``(n,)``,
    ``(n, K)`` and ``(n,)``. Predictions are probabilities for a
    :class:`DecisionTree` and margins for a :class:`BoostedModel`.
    """
    model = getattr(model, "model_", model)
    arr, _ = as_rows(X, model.n_features)
    contrib = np.zeros(arr.shape)
    if isinstance(model, DecisionTree):
        pred = _tree_pieces(model.tree, arr, contrib)
        bias = np.full(len(arr), model.tree.value[0])
    elif isinstance(model, BoostedModel):
        bias_value = model.base_margin
        pred = np.full(len(arr), model.base_margin)
        for tree in model.trees:
            pred += _tree_pieces(tree, arr, contrib)
            bias_value += tree.value[0]
        bias = np.full(len(arr), bias_value)
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    return bias, contrib, pred


def tree_contributions(tree: DecisionTree, x) -> ContributionVector:
    """Decompose one probability prediction of a single tree."""
    if not isinstance(getattr(tree, "model_", tree), DecisionTree):
        raise TypeError("tree_contributions expects a DecisionTree")
    return _single(tree, x, PROBABILITY)


def ensemble_contributions(m: BoostedModel, x) -> ContributionVector:
    """Decompose one margin prediction of a boosted model.

    The bias is the base margin plus every tree's root value (its mean output
    over training rows).
    """
    if not isinstance(getattr(m, "model_", m), BoostedModel):
        raise TypeError("ensemble_contributions expects a BoostedModel")
    return _single(m, x, LOG_ODDS)


def _single(model, x, space) -> ContributionVector:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"expected one feature vector, got shape {arr.shape}")
    bias, contrib, pred = contributions_matrix(model, arr[None, :])
    names = getattr(model, "model_", model).feature_names
    return ContributionVector(float(bias[0]), contrib[0], float(pred[0]), space, names)


@dataclass(frozen=True)
class ExplanationRow:
    feature: str
    weight: float
    value: float
    is_bias: bool = False


BIAS = "<BIAS>"


def explain_prediction(model, x, sort: str = "abs") -> list[ExplanationRow]:
    """Listing of one prediction: a bias row plus every feature with a nonzero weight.

    ``sort="abs"`` orders by ``|weight|`` descending; ``sort="signed"`` by
    signed weight descending. Ties fall back to feature index, with the bias
    row placed before features.
    """
    inner = getattr(model, "model_", model)
    cv = _single(inner, x, PROBABILITY if isinstance(inner, DecisionTree) else LOG_ODDS)
    if sort not in ("abs", "signed"):
        raise ValueError(f"sort must be 'abs' or 'signed', got {sort!r}")
    x = np.asarray(x, dtype=float)
    entries = [(-1, ExplanationRow(BIAS, cv.bias, 1.0, True))]
    for j in np.flatnonzero(cv.contributions):
        entries.append((int(j), ExplanationRow(cv.feature_names[j], float(cv.contributions[j]), float(x[j]))))
    key = (lambda e: (-abs(e[1].weight), e[0])) if sort == "abs" else (lambda e: (-e[1].weight, e[0]))
    return [row for _, row in sorted(entries, key=key)]

"""Binary decision trees with mean-target node values.

Every node, internal or leaf, stores the mean target of the training samples
that reached it. That is what makes a prediction decomposable along its
decision path (see :mod:`hollowtree.contributions`).

Routing convention: ``x[feature] <= threshold`` goes left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from . import _splitter
from ._validation import as_rows, encode_classes
from .dataset import Dataset

__all__ = [
    "TreeNode",
    "Tree",
    "DecisionTree",
    "DecisionTreeClassifier",
    "fit_tree",
    "predict_proba",
    "decision_path",
    "grow_tree",
]


@dataclass(frozen=True)
class TreeNode:
    """One node of a fitted tree. Leaves have ``feature_index == -1`` and no children."""

    node_value: float
    n_samples: int
    feature_index: int = -1
    threshold: float = math.nan
    left: TreeNode | None = None
    right: TreeNode | None = None
    impurity: float = math.nan
    gain: float = 0.0

    @property
    def kind(self) -> str:
        return "leaf" if self.left is None else "internal"

    @property
    def is_leaf(self) -> bool:
        return self.left is None


class Tree:
    """Flat array form of a binary tree, nodes numbered in preorder with the root at 0.

    Fields mirror :class:`TreeNode`; ``feature``, ``left`` and ``right`` are -1
    at leaves. ``gain`` is the split score credited to the node's feature by
    importance tables, 0 at leaves.
    """

    __slots__ = ("feature", "threshold", "left", "right", "value", "n_samples", "impurity", "gain")

    def __init__(self, feature, threshold, left, right, value, n_samples, impurity, gain):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float)
        self.n_samples = np.asarray(n_samples, dtype=np.int64)
        self.impurity = np.asarray(impurity, dtype=float)
        self.gain = np.asarray(gain, dtype=float)
        for name in self.__slots__:
            getattr(self, name).setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return len(self.value)

    @property
    def n_splits(self) -> int:
        return int(np.count_nonzero(self.feature >= 0))

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] < 0

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):  # preorder: parents precede children
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of a validated 2-D ``X``."""
        node = np.zeros(len(X), dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def path(self, x: np.ndarray) -> list[int]:
        """Node indices from the root to the leaf reached by one vector ``x``."""
        nodes = [0]
        while self.feature[nodes[-1]] >= 0:
            i = nodes[-1]
            nodes.append(int(self.left[i] if x[self.feature[i]] <= self.threshold[i] else self.right[i]))
        return nodes

    def node(self, i: int) -> TreeNode:
        """Recursive :class:`TreeNode` view of the subtree rooted at ``i``."""
        if self.feature[i] < 0:
            return TreeNode(
                float(self.value[i]), int(self.n_samples[i]), impurity=float(self.impurity[i])
            )
        return TreeNode(
            node_value=float(self.value[i]),
            n_samples=int(self.n_samples[i]),
            feature_index=int(self.feature[i]),
            threshold=float(self.threshold[i]),
            left=self.node(int(self.left[i])),
            right=self.node(int(self.right[i])),
            impurity=float(self.impurity[i]),
            gain=float(self.gain[i]),
        )

    @property
    def root(self) -> TreeNode:
        return self.node(0)

    @classmethod
    def from_root(cls, root: TreeNode) -> Tree:
        cols: dict[str, list] = {name: [] for name in cls.__slots__}

        def visit(n: TreeNode) -> int:
            i = len(cols["value"])
            cols["feature"].append(n.feature_index if not n.is_leaf else -1)
            cols["threshold"].append(n.threshold if not n.is_leaf else math.nan)
            cols["left"].append(-1)
            cols["right"].append(-1)
            cols["value"].append(n.node_value)
            cols["n_samples"].append(n.n_samples)
            cols["impurity"].append(n.impurity)
            cols["gain"].append(n.gain if not n.is_leaf else 0.0)
            if not n.is_leaf:
                cols["left"][i] = visit(n.left)
                cols["right"][i] = visit(n.right)
            return i

        visit(root)
        return cls(**cols)

    def to_dict(self) -> dict:
        nodes = []
        for i in range(self.n_nodes):
            rec = {
                "id": i,
                "kind": "leaf" if self.feature[i] < 0 else "internal",
                "value": float(self.value[i]),
                "samples": int(self.n_samples[i]),
            }
            if not math.isnan(self.impurity[i]):
                rec["impurity"] = float(self.impurity[i])
            if self.feature[i] >= 0:
                rec.update(
                    feature=int(self.feature[i]),
                    threshold=float(self.threshold[i]),
                    left=int(self.left[i]),
                    right=int(self.right[i]),
                    gain=float(self.gain[i]),
                )
            nodes.append(rec)
        return {"nodes": nodes}

    @classmethod
    def from_dict(cls, data: dict) -> Tree:
        nodes = sorted(data["nodes"], key=lambda r: r["id"])
        if [r["id"] for r in nodes] != list(range(len(nodes))):
            raise ValueError("tree node ids must be 0..n-1")
        internal = [r["kind"] == "internal" for r in nodes]
        return cls(
            feature=[r["feature"] if x else -1 for r, x in zip(nodes, internal)],
            threshold=[r["threshold"] if x else math.nan for r, x in zip(nodes, internal)],
            left=[r["left"] if x else -1 for r, x in zip(nodes, internal)],
            right=[r["right"] if x else -1 for r, x in zip(nodes, internal)],
            value=[r["value"] for r in nodes],
            n_samples=[r["samples"] for r in nodes],
            impurity=[r.get("impurity", math.nan) for r in nodes],
            gain=[r.get("gain", 0.0) for r in nodes],
        )

    def equals(self, other: Tree) -> bool:
        return all(
            np.array_equal(getattr(self, k), getattr(other, k), equal_nan=k in ("threshold", "impurity"))
            for k in self.__slots__
        )


def grow_tree(
    X: np.ndarray,
    order: np.ndarray,
    max_depth: int,
    find_split: Callable[[np.ndarray], tuple[int, float, float]],
    leaf_value: Callable[[np.ndarray], float],
    node_value: Callable[[np.ndarray], float] | None = None,
    impurity: Callable[[np.ndarray], float] | None = None,
) -> Tree:
    """Depth-first greedy growth shared by classification and boosting trees.

    ``find_split(order)`` returns ``(feature, threshold, gain)`` with feature -1
    to stop. Internal nodes take ``node_value(rows)`` when given, otherwise the
    sample-weighted mean of their children.
    """
    cols: dict[str, list] = {name: [] for name in Tree.__slots__}
    n_total = X.shape[0]

    def rec(order: np.ndarray, depth: int) -> int:
        rows = order[0]
        i = len(cols["value"])
        for name, v in (("feature", -1), ("threshold", math.nan), ("left", -1), ("right", -1),
                        ("value", 0.0), ("n_samples", len(rows)), ("gain", 0.0)):
            cols[name].append(v)
        cols["impurity"].append(impurity(rows) if impurity is not None else math.nan)
        f = -1
        if depth < max_depth and len(rows) >= 2:
            f, t, gain = find_split(order)
        if f < 0:
            cols["value"][i] = leaf_value(rows)
            return i
        go_left = np.zeros(n_total, dtype=np.bool_)
        go_left[rows] = X[rows, f] <= t
        left_order, right_order = _splitter.partition(order, go_left)
        li = rec(left_order, depth + 1)
        ri = rec(right_order, depth + 1)
        cols["feature"][i], cols["threshold"][i], cols["gain"][i] = f, t, gain
        cols["left"][i], cols["right"][i] = li, ri
        if node_value is not None:
            cols["value"][i] = node_value(rows)
        else:
            nl, nr = cols["n_samples"][li], cols["n_samples"][ri]
            cols["value"][i] = (nl * cols["value"][li] + nr * cols["value"][ri]) / (nl + nr)
        return i

    rec(order, 0)
    return Tree(**cols)


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """A fitted classification tree; node values are positive-class fractions."""

    tree: Tree
    feature_names: tuple[str, ...]
    max_depth: int
    min_samples_leaf: int = 1

    @property
    def root(self) -> TreeNode:
        return self.tree.root

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def predict_proba(self, X):
        """Positive-class probability; a scalar for a single feature vector."""
        arr, single = as_rows(X, self.n_features)
        p = self.tree.predict(arr)
        return float(p[0]) if single else p

    def predict(self, X):
        p = self.predict_proba(X)
        return (np.asarray(p) >= 0.5).astype(int) if np.ndim(p) else int(p >= 0.5)

    def decision_path(self, x) -> list[tuple[TreeNode, TreeNode]]:
        return decision_path(self, x)

    def to_dict(self) -> dict:
        return {
            "model": "decision_tree",
            "feature_names": list(self.feature_names),
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "tree": self.tree.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> DecisionTree:
        if data.get("model") != "decision_tree":
            raise ValueError(f"not a decision tree document: model={data.get('model')!r}")
        return cls(
            Tree.from_dict(data["tree"]),
            tuple(data["feature_names"]),
            int(data["max_depth"]),
            int(data.get("min_samples_leaf", 1)),
        )


def _fit_arrays(X: np.ndarray, y: np.ndarray, max_depth: int, min_samples_leaf: int) -> Tree:
    y = np.ascontiguousarray(y, dtype=np.int64)
    X = np.ascontiguousarray(X, dtype=float)

    def find_split(order):
        # credit n_samples * decrease, the weighted Gini importance
        f, t, dec = _splitter.best_gini_split(X, y, order, min_samples_leaf)
        return f, t, dec * order.shape[1]

    def mean_target(rows):
        return float(np.count_nonzero(y[rows])) / len(rows)

    def gini(rows):
        p = np.count_nonzero(y[rows]) / len(rows)
        return 2.0 * p * (1.0 - p)

    return grow_tree(X, _splitter.presort(X), max_depth, find_split, mean_target, mean_target, gini)


def fit_tree(ds: Dataset, max_depth: int = 4, min_samples_leaf: int = 1) -> DecisionTree:
    """Fit a Gini CART tree to a binary :class:`Dataset`.

    Stops at ``max_depth``, at pure nodes, or when no admissible split lowers
    impurity. A dataset with a single class is allowed and yields one leaf.
    """
    if ds.n_rows == 0:
        raise ValueError("cannot fit a tree to an empty dataset")
    if max_depth < 0:
        raise ValueError(f"max_depth must be non-negative, got {max_depth}")
    if min_samples_leaf < 1:
        raise ValueError(f"min_samples_leaf must be at least 1, got {min_samples_leaf}")
    if ds.n_rows < 2 * min_samples_leaf:
        raise ValueError(f"need at least {2 * min_samples_leaf} rows for min_samples_leaf={min_samples_leaf}")
    y = np.asarray(ds.labels)
    if y.dtype.kind not in "iub" or not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be binary 0/1; see dataset.binarize")
    tree = _fit_arrays(ds.rows, y, max_depth, min_samples_leaf)
    return DecisionTree(tree, ds.feature_names, max_depth, min_samples_leaf)


def predict_proba(tree: DecisionTree, x) -> float:
    return tree.predict_proba(x)


def decision_path(tree: DecisionTree, x) -> list[tuple[TreeNode, TreeNode]]:
    """``(node, chosen_child)`` pairs from root to leaf; empty for a single-leaf tree."""
    arr, _ = as_rows(x, tree.n_features)
    if arr.shape[0] != 1:
        raise ValueError("decision_path takes a single feature vector")
    ids = tree.tree.path(arr[0])
    views = [tree.tree.node(i) for i in ids]
    return list(zip(views[:-1], views[1:]))


class DecisionTreeClassifier(ClassifierMixin, BaseEstimator):
    """Estimator wrapper around :func:`fit_tree`.

    Parameters
    ----------
    max_depth : int, default=4
    min_samples_leaf : int, default=1
    """

    def __init__(self, max_depth: int = 4, min_samples_leaf: int = 1):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf

    def fit(self, X, y, feature_names=None):
        X, _ = as_rows(X)
        self.classes_, y01 = encode_classes(y)
        names = feature_names if feature_names is not None else [f"x{j}" for j in range(X.shape[1])]
        self.model_ = fit_tree(Dataset(names, X, y01), self.max_depth, self.min_samples_leaf)
        self.n_features_in_ = X.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError(f"{type(self).__name__} is not fitted yet; call fit first")

    def predict_proba(self, X):
        self._check_fitted()
        p = self.model_.predict_proba(as_rows(X, self.n_features_in_)[0])
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return self.classes_[(self.predict_proba(X)[:, 1] >= 0.5).astype(int)]

    @property
    def feature_importances_(self):
        from .importance import gini_importance

        self._check_fitted()
        return gini_importance(self.model_).scores

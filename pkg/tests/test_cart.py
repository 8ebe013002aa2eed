import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone

from conftest import node_means_oracle, random_dataset
from hollowtree import Dataset, DecisionTree, DecisionTreeClassifier, decision_path, fit_tree
from hollowtree.cart import predict_proba


def exhaustive_root_split(X, y):
    """Try every midpoint of every feature; keep the first strictly best."""
    n = len(y)

    def gini(t):
        p = sum(t) / len(t)
        return 2 * p * (1 - p)

    parent = gini(y)
    best = (-1, None, 0.0)
    for f in range(X.shape[1]):
        values = sorted(set(X[:, f]))
        for a, b in zip(values, values[1:]):
            t = (a + b) / 2
            left = [yi for xi, yi in zip(X[:, f], y) if xi <= t]
            right = [yi for xi, yi in zip(X[:, f], y) if xi > t]
            dec = parent - (len(left) * gini(left) + len(right) * gini(right)) / n
            if dec > best[2] + 1e-12:
                best = (f, t, dec)
    return best


def four_points():
    return Dataset(("x",), np.array([[0.0], [1.0], [2.0], [3.0]]), np.array([0, 0, 1, 1]))


def test_four_point_split():
    t = fit_tree(four_points(), max_depth=3)
    root = t.root
    assert root.feature_index == 0 and root.threshold == 1.5
    assert root.node_value == 0.5
    assert root.left.is_leaf and root.left.node_value == 0.0
    assert root.right.is_leaf and root.right.node_value == 1.0
    assert root.impurity == 0.5


def test_pure_node_is_leaf():
    ds = Dataset(("x", "z"), np.random.default_rng(0).normal(size=(9, 2)), np.ones(9, dtype=int))
    t = fit_tree(ds)
    assert t.tree.n_nodes == 1 and t.root.node_value == 1.0
    assert decision_path(t, ds.rows[0]) == []


def test_threshold_routing_is_inclusive_left():
    t = fit_tree(four_points())
    assert predict_proba(t, [1.5]) == 0.0
    assert predict_proba(t, [1.5000001]) == 1.0


@given(seed=st.integers(0, 10_000), discrete=st.booleans())
def test_root_split_matches_exhaustive_oracle(seed, discrete):
    ds = random_dataset(np.random.default_rng(seed), n=30, k=3, discrete=discrete)
    t = fit_tree(ds, max_depth=1)
    f, thr, dec = exhaustive_root_split(ds.rows, ds.labels.tolist())
    if f < 0:
        assert t.tree.n_nodes == 1
    else:
        assert (t.tree.feature[0], t.tree.threshold[0]) == (f, thr)
        assert t.tree.gain[0] == pytest.approx(dec * ds.n_rows)


def test_tie_break_lowest_feature_then_threshold():
    # both columns separate perfectly; column 0 must win
    X = np.array([[0.0, 10.0], [1.0, 11.0], [2.0, 12.0], [3.0, 13.0]])
    t = fit_tree(Dataset(("a", "b"), X, np.array([0, 0, 1, 1])), max_depth=1)
    assert t.tree.feature[0] == 0
    # two equally good thresholds on one column: the lower one wins
    X = np.array([[0.0], [1.0], [2.0], [3.0], [4.0], [5.0]])
    t = fit_tree(Dataset(("a",), X, np.array([1, 0, 0, 0, 0, 1])), max_depth=1)
    assert t.tree.threshold[0] == 0.5


@given(seed=st.integers(0, 10_000), depth=st.integers(0, 6), leaf=st.integers(1, 4))
def test_node_values_are_training_means(seed, depth, leaf):
    ds = random_dataset(np.random.default_rng(seed), n=50)
    t = fit_tree(ds, max_depth=depth, min_samples_leaf=leaf)
    tree = t.tree
    means, counts = node_means_oracle(tree, ds.rows, ds.labels)
    assert np.allclose(means, tree.value)
    assert np.array_equal(counts, tree.n_samples)
    assert tree.depth <= depth
    leaves = tree.feature < 0
    assert tree.n_samples[leaves].min() >= leaf
    internal = np.flatnonzero(~leaves)
    for i in internal:
        l, r = tree.left[i], tree.right[i]
        nl, nr = tree.n_samples[l], tree.n_samples[r]
        assert tree.value[i] == pytest.approx((nl * tree.value[l] + nr * tree.value[r]) / (nl + nr))


@given(seed=st.integers(0, 10_000))
def test_training_accuracy_non_decreasing_in_depth(seed):
    ds = random_dataset(np.random.default_rng(seed), n=60)
    accs = []
    for depth in range(6):
        t = fit_tree(ds, max_depth=depth)
        accs.append(np.mean(t.predict(ds.rows) == ds.labels))
    assert all(a <= b + 1e-12 for a, b in zip(accs, accs[1:]))


def test_prediction_is_leaf_on_path(iris):
    t = fit_tree(iris)
    for x in iris.rows[::7]:
        path = decision_path(t, x)
        assert path[0][0].node_value == t.root.node_value
        assert path[-1][1].is_leaf
        assert path[-1][1].node_value == t.predict_proba(x)
        for parent, child in path:
            went_left = x[parent.feature_index] <= parent.threshold
            assert child is not None
            assert (parent.left == child) == went_left


def test_deterministic(iris):
    a, b = fit_tree(iris), fit_tree(iris)
    assert a.tree.equals(b.tree)


def test_json_round_trip(iris):
    t = fit_tree(iris, max_depth=4)
    doc = json.loads(json.dumps(t.to_dict()))
    back = DecisionTree.from_dict(doc)
    assert back.tree.equals(t.tree)
    assert np.array_equal(back.predict_proba(iris.rows), t.predict_proba(iris.rows))
    with pytest.raises(ValueError, match="not a decision tree"):
        DecisionTree.from_dict({"model": "boosted"})


def test_predict_shapes(iris):
    t = fit_tree(iris)
    assert isinstance(t.predict_proba(iris.rows[0]), float)
    assert t.predict_proba(iris.rows).shape == (100,)
    with pytest.raises(ValueError):
        t.predict_proba(np.zeros(3))


@pytest.mark.parametrize("kwargs", [{"max_depth": -1}, {"min_samples_leaf": 0}])
def test_bad_hyperparameters(iris, kwargs):
    with pytest.raises(ValueError):
        fit_tree(iris, **kwargs)


def test_rejects_non_binary_labels():
    ds = Dataset(("x",), np.arange(4.0)[:, None], np.array([0, 1, 2, 1]))
    with pytest.raises(ValueError, match="binary"):
        fit_tree(ds)


def test_estimator_wrapper(iris):
    clf = DecisionTreeClassifier(max_depth=3).fit(iris.rows, np.where(iris.labels == 1, "v", "c"))
    assert clf.get_params() == {"max_depth": 3, "min_samples_leaf": 1}
    assert clf.classes_.tolist() == ["c", "v"]
    proba = clf.predict_proba(iris.rows)
    assert proba.shape == (100, 2) and np.allclose(proba.sum(axis=1), 1.0)
    assert set(clf.predict(iris.rows)) <= {"c", "v"}
    assert clf.score(iris.rows, np.where(iris.labels == 1, "v", "c")) > 0.9
    assert clone(clf).get_params() == clf.get_params()
    assert clf.feature_importances_.sum() == pytest.approx(1.0)

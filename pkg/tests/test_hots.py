import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import logit

from hollowtree import (
    BoostedModel,
    Dataset,
    DecisionTree,
    HotsExplainer,
    HotsReport,
    Hyperparams,
    Tree,
    TreeNode,
    fit_gbdt,
    make_planted_dataset,
    run_hots_cv,
    stratified_kfold,
)
from hollowtree.contributions import contributions_matrix
from hollowtree.hots import (
    ClassSummary,
    aggregate_class_weights,
    apply_directionality,
    class_mean_signs,
    filter_predictions,
    hots_fold,
)

FAST = Hyperparams(n_rounds=20, max_depth=3)


def constant_tree(p, k=2):
    return DecisionTree(Tree.from_root(TreeNode(p, 10)), tuple(f"f{j}" for j in range(k)), 0)


def constant_boosted(p, k=2):
    return BoostedModel((), float(logit(p)), tuple(f"f{j}" for j in range(k)))


def toy(labels, k=2, seed=0):
    labels = np.asarray(labels)
    X = np.random.default_rng(seed).normal(size=(len(labels), k))
    return Dataset(tuple(f"f{j}" for j in range(k)), X, labels)


def test_filter_threshold_boundary():
    ds = toy([1, 1, 1])
    assert filter_predictions(constant_tree(0.70), ds, 0.70).positive.tolist() == [0, 1, 2]
    assert filter_predictions(constant_tree(0.69), ds, 0.70).positive.size == 0
    assert filter_predictions(constant_boosted(0.71), ds, 0.70).positive.size == 3
    assert filter_predictions(constant_boosted(0.69), ds, 0.70).positive.size == 0


def test_filter_drops_confident_errors():
    ds = toy([0, 0, 1])
    kept = filter_predictions(constant_boosted(0.95), ds, 0.70)
    assert kept.positive.tolist() == [2]
    assert kept.negative.size == 0
    kept = filter_predictions(constant_boosted(0.05), ds, 0.70)
    assert kept.negative.tolist() == [0, 1]
    assert kept.n_evaluated == 3


def test_filter_keeps_everything_on_separable_data():
    X = np.linspace(-1, 1, 30)[:, None]
    ds = Dataset(("x",), X, (X[:, 0] > 0).astype(int))
    m = fit_gbdt(ds, Hyperparams(n_rounds=30, max_depth=1))
    kept = filter_predictions(m, ds, 0.70)
    assert kept.positive.size + kept.negative.size == 30


@given(seed=st.integers(0, 1000), lo=st.floats(0.0, 1.0), hi=st.floats(0.0, 1.0))
def test_filter_is_monotone_in_threshold(seed, lo, hi):
    lo, hi = min(lo, hi), max(lo, hi)
    ds = make_planted_dataset(40, 3, [(0, 1)], 1.0, seed)
    m = fit_gbdt(ds, Hyperparams(n_rounds=5, max_depth=2))
    a, b = filter_predictions(m, ds, lo), filter_predictions(m, ds, hi)
    assert set(b.positive) <= set(a.positive)
    assert set(b.negative) <= set(a.negative)


def stump():
    root = TreeNode(0.5, 2, 0, 0.0, TreeNode(0.0, 1), TreeNode(1.0, 1))
    return DecisionTree(Tree.from_root(root), ("f0", "f1"), 1)


def test_aggregate_single_row_and_cancellation():
    ds = Dataset(("f0", "f1"), np.array([[-1.0, 0.0], [1.0, 0.0]]), np.array([1, 1]))
    one = aggregate_class_weights(stump(), ds, [1], "positive")
    assert one.mean_weight.tolist() == [0.5, 0.0] and one.n_predictions_kept == 1
    both = aggregate_class_weights(stump(), ds, [0, 1], "positive")
    assert both.mean_weight.tolist() == [0.0, 0.0]
    neg = aggregate_class_weights(stump(), ds, [0], "negative")
    # oriented toward class 0: a -0.5 probability step for class 1 is +0.5 for class 0
    assert neg.mean_weight.tolist() == [0.5, 0.0]
    empty = aggregate_class_weights(stump(), ds, [], "negative")
    assert empty.n_predictions_kept == 0 and not empty.mean_weight.any()
    with pytest.raises(ValueError):
        aggregate_class_weights(stump(), ds, [0], "neutral")


def test_aggregate_matches_manual_mean(iris):
    m = fit_gbdt(iris, FAST)
    kept = filter_predictions(m, iris, 0.7)
    _, contrib, _ = contributions_matrix(m, iris.rows)
    pos = aggregate_class_weights(m, iris, kept.positive, "positive")
    neg = aggregate_class_weights(m, iris, kept.negative, "negative")
    assert np.allclose(pos.mean_weight, contrib[kept.positive].mean(axis=0))
    assert np.allclose(neg.mean_weight, -contrib[kept.negative].mean(axis=0))


def test_class_mean_signs_and_ties():
    X = np.array([[1.0, 5.0, 2.0], [3.0, 1.0, 2.0], [2.0, 4.0, 2.0], [4.0, 0.0, 2.0]])
    ds = Dataset(("a", "b", "c"), X, np.array([0, 1, 0, 1]))
    signs, tied = class_mean_signs(ds)
    assert signs.tolist() == [1.0, -1.0, 1.0]
    assert tied.tolist() == [False, False, True]
    pos = ClassSummary("positive", [1.0, 1.0, 1.0], 2)
    neg = ClassSummary("negative", [1.0, 1.0, 1.0], 2)
    p, n, tied_idx = apply_directionality(pos, neg, ds)
    assert p.mean_weight.tolist() == [1.0, -1.0, 1.0]
    assert n.mean_weight.tolist() == [-1.0, 1.0, -1.0]
    assert tied_idx.tolist() == [2]


def test_class_summary_validation():
    with pytest.raises(ValueError):
        ClassSummary("maybe", [0.0], 0)


def test_planted_directions():
    ds = make_planted_dataset(200, 8, [(0, 1), (1, -1)], 0.5, 0)
    r = run_hots_cv(ds, FAST, seed=0)
    assert set(r.top_features("positive", 2)) == {0, 1}
    assert set(r.top_features("negative", 2)) == {0, 1}
    assert r.positive_weights[0] > 0 and r.negative_weights[0] < 0
    assert r.positive_weights[1] < 0 and r.negative_weights[1] > 0
    assert r.fold_counts[0] == r.fold_counts[1] == 5


def test_unreachable_threshold_gives_empty_report(iris):
    r = run_hots_cv(iris, FAST, k=3, threshold=1.01, seed=0)
    assert r.fold_counts.tolist() == [0, 0, 0, 0]
    assert not r.positive_weights.any() and not r.negative_weights.any()
    for f in r.folds:
        assert f.positive.n_predictions_kept == f.negative.n_predictions_kept == 0
    assert HotsReport.from_dict(json.loads(json.dumps(r.to_dict()))) == r


@given(seed=st.integers(0, 50), threshold=st.sampled_from([0.5, 0.7, 0.9, 0.99]))
def test_weights_zero_iff_unused(seed, threshold):
    ds = make_planted_dataset(60, 5, [(0, 1)], 1.0, seed)
    r = run_hots_cv(ds, Hyperparams(n_rounds=5, max_depth=2), k=3, threshold=threshold, seed=seed)
    unused = r.fold_counts == 0
    assert not r.positive_weights[unused].any() and not r.negative_weights[unused].any()
    for f in r.folds:
        nonzero = (f.positive.mean_weight != 0) | (f.negative.mean_weight != 0)
        assert np.flatnonzero(nonzero).tolist() == list(f.features_used)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_label_flip_symmetry(iris, seed):
    plan = stratified_kfold(iris, 5, seed)
    a = run_hots_cv(iris, FAST, plan=plan)
    b = run_hots_cv(iris.with_labels(1 - iris.labels), FAST, plan=plan)
    assert np.allclose(b.positive_weights, a.negative_weights, atol=1e-9, rtol=0)
    assert np.allclose(b.negative_weights, a.positive_weights, atol=1e-9, rtol=0)
    assert np.array_equal(a.fold_counts, b.fold_counts)


@pytest.mark.parametrize("scale", [0.25, 2.0, 8.0])
def test_affine_invariance_exact_scaling(iris, scale):
    a = run_hots_cv(iris, FAST, seed=1)
    assert run_hots_cv(iris.with_rows(iris.rows * scale), FAST, seed=1) == a


@pytest.mark.parametrize("scale, shift", [(3.0, -7.5), (0.37, 0.11), (10.0, 5.0)])
def test_affine_invariance_continuous(scale, shift):
    ds = make_planted_dataset(80, 6, [(0, 1), (1, -1)], 0.5, 4)
    a = run_hots_cv(ds, FAST, seed=4)
    assert run_hots_cv(ds.with_rows(ds.rows * scale + shift), FAST, seed=4) == a


def test_deterministic_and_round_trip(iris):
    a, b = run_hots_cv(iris, FAST, seed=5), run_hots_cv(iris, FAST, seed=5)
    assert a == b
    assert HotsReport.from_dict(json.loads(json.dumps(a.to_dict()))) == a
    assert a.config["k"] == 5 and a.config["hyperparams"]["n_rounds"] == 20


def test_fold_result_uses_training_means_for_signs(iris):
    plan = stratified_kfold(iris, 5, 0)
    train, test = next(plan.split())
    m = fit_gbdt(iris.subset(train), FAST)
    fr = hots_fold(m, iris.subset(train), iris.subset(test), 0.7)
    assert fr.accuracy > 0.8
    assert fr.positive.n_predictions_kept + fr.negative.n_predictions_kept <= len(test)


def test_rejects_mismatched_plan(iris):
    plan = stratified_kfold(iris.subset(np.arange(60)), 3, 0)
    with pytest.raises(ValueError, match="fold plan"):
        run_hots_cv(iris, FAST, plan=plan)


def test_explainer_estimator(iris):
    names = np.where(iris.labels == 1, "virginica", "versicolor")
    ex = HotsExplainer(n_folds=3, n_rounds=10, max_depth=3).fit(iris.rows, names, iris.feature_names)
    assert ex.get_params()["n_folds"] == 3
    assert ex.fold_counts_.shape == (4,)
    assert ex.classes_.tolist() == ["versicolor", "virginica"]
    assert ex.report_.feature_names == iris.feature_names

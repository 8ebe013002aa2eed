"""Decision trees, Newton-boosted trees, additive prediction contributions and
HOTS cross-validated directional feature importance."""

from .cart import DecisionTree, DecisionTreeClassifier, Tree, TreeNode, decision_path, fit_tree
from .contributions import ContributionVector, ensemble_contributions, explain_prediction, tree_contributions
from .dataset import (
    Dataset,
    DatasetError,
    FoldPlan,
    binarize,
    load_csv,
    load_iris,
    load_iris_binary,
    make_planted_dataset,
    stratified_kfold,
    stratified_split,
    write_csv,
)
from .gbdt import BoostedModel, GradientBoostedClassifier, Hyperparams, fit_gbdt
from .hots import HotsExplainer, HotsReport, run_hots_cv
from .importance import gini_importance, pdp_1d, pdp_2d, permutation_importance
from .metrics import EvalMetrics, evaluate

__version__ = "0.1.0"

__all__ = [
    "binarize",
    "BoostedModel",
    "ContributionVector",
    "Dataset",
    "DatasetError",
    "decision_path",
    "DecisionTree",
    "DecisionTreeClassifier",
    "ensemble_contributions",
    "EvalMetrics",
    "evaluate",
    "explain_prediction",
    "fit_gbdt",
    "fit_tree",
    "FoldPlan",
    "gini_importance",
    "GradientBoostedClassifier",
    "HotsExplainer",
    "HotsReport",
    "Hyperparams",
    "load_csv",
    "load_iris",
    "load_iris_binary",
    "make_planted_dataset",
    "pdp_1d",
    "pdp_2d",
    "permutation_importance",
    "run_hots_cv",
    "stratified_kfold",
    "stratified_split",
    "Tree",
    "tree_contributions",
    "TreeNode",
    "write_csv",
]

from ._grow import newton_gain, newton_leaf_weight
from ._tree import (
    NewtonGain,
    RegressionTree,
    TreeStructure,
    VarianceReduction,
    fit_tree,
    grow_tree,
    predict_tree,
    resolve_feature_subsample,
)

__all__ = [
    "NewtonGain",
    "RegressionTree",
    "TreeStructure",
    "VarianceReduction",
    "fit_tree",
    "grow_tree",
    "newton_gain",
    "newton_leaf_weight",
    "predict_tree",
    "resolve_feature_subsample",
]

"""CART regression trees with exhaustive split search.

Two split objectives are supported. ``VarianceReduction`` grows a classic
least-squares tree whose leaves hold target means; ``NewtonGain`` grows a
second-order tree on per-row gradients and hessians whose leaves hold the
regularised Newton step. Both share one compiled growth kernel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ..exceptions import ClvStackError, EmptyInputError, ModelFormatError
from .._validation import as_float_matrix, as_float_vector, check_n_features
from . import _grow


@dataclass(frozen=True)
class VarianceReduction:
    targets: np.ndarray


@dataclass(frozen=True)
class NewtonGain:
    gradients: np.ndarray
    hessians: np.ndarray


def resolve_feature_subsample(feature_subsample, n_features: int) -> int:
    """Number of candidate features examined at each node."""
    if feature_subsample in (None, "all"):
        return n_features
    if feature_subsample == "sqrt":
        return max(1, math.ceil(math.sqrt(n_features)))
    if isinstance(feature_subsample, str):
        raise ClvStackError(f"unknown feature_subsample {feature_subsample!r}")
    frac = float(feature_subsample)
    if not 0.0 < frac <= 1.0:
        raise ClvStackError(f"feature_subsample fraction must be in (0, 1], got {frac}")
    return max(1, math.ceil(frac * n_features))


def _check_tree_params(max_depth, min_samples_leaf, min_gain, lambda_l2, alpha_l1, gamma_complexity):
    if int(max_depth) != max_depth or max_depth < 1:
        raise ClvStackError(f"max_depth must be a positive integer, got {max_depth!r}")
    if int(min_samples_leaf) != min_samples_leaf or min_samples_leaf < 1:
        raise ClvStackError(f"min_samples_leaf must be a positive integer, got {min_samples_leaf!r}")
    for name, v in (
        ("min_gain", min_gain),
        ("lambda_l2", lambda_l2),
        ("alpha_l1", alpha_l1),
        ("gamma_complexity", gamma_complexity),
    ):
        if not (np.isfinite(v) and v >= 0):
            raise ClvStackError(f"{name} must be a non-negative real, got {v!r}")


class TreeStructure:
    """Fitted tree stored as parallel node arrays.

    ``feature[i] == -1`` marks a leaf. Internal nodes route a row left when
    ``x[feature] <= threshold``. ``gain`` is the split gain of internal nodes
    (0 for leaves) and ``cover`` the row count (variance mode) or hessian sum
    (Newton mode) that reached the node during training.
    """

    def __init__(self, feature, threshold, left, right, value, gain, cover, n_samples, n_features):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)
        self.gain = np.asarray(gain, dtype=np.float64)
        self.cover = np.asarray(cover, dtype=np.float64)
        self.n_samples = np.asarray(n_samples, dtype=np.int64)
        self.n_features = int(n_features)

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature == _grow.LEAF

    @property
    def n_leaves(self) -> int:
        return int(self.is_leaf.sum())

    @property
    def n_internal(self) -> int:
        return self.node_count - self.n_leaves

    @property
    def max_depth(self) -> int:
        depth = np.zeros(self.node_count, dtype=np.int64)
        for node in range(self.node_count):
            if self.feature[node] != _grow.LEAF:
                depth[self.left[node]] = depth[node] + 1
                depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def internal_nodes(self) -> Iterator[tuple[int, float, float]]:
        """Yield ``(feature, gain, cover)`` for every split node."""
        for node in np.flatnonzero(~self.is_leaf):
            yield int(self.feature[node]), float(self.gain[node]), float(self.cover[node])

    def apply(self, X: np.ndarray) -> np.ndarray:
        return _grow.apply_rows(X, self.feature, self.threshold, self.left, self.right)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self, node: int = 0) -> dict:
        if self.feature[node] == _grow.LEAF:
            return {
                "value": float(self.value[node]),
                "cover": float(self.cover[node]),
                "samples": int(self.n_samples[node]),
            }
        return {
            "feature": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "gain": float(self.gain[node]),
            "cover": float(self.cover[node]),
            "samples": int(self.n_samples[node]),
            "left": self.to_dict(int(self.left[node])),
            "right": self.to_dict(int(self.right[node])),
        }

    @classmethod
    def from_dict(cls, root: dict, n_features: int) -> "TreeStructure":
        cols = {k: [] for k in ("feature", "threshold", "left", "right", "value", "gain", "cover", "n_samples")}

        def visit(node: dict) -> int:
            i = len(cols["feature"])
            for k in cols:
                cols[k].append(0)
            try:
                cols["cover"][i] = node["cover"]
                cols["n_samples"][i] = node.get("samples", 0)
                if "feature" in node:
                    cols["feature"][i] = node["feature"]
                    cols["threshold"][i] = node["threshold"]
                    cols["gain"][i] = node["gain"]
                    cols["value"][i] = np.nan
                    cols["left"][i] = visit(node["left"])
                    cols["right"][i] = visit(node["right"])
                else:
                    cols["feature"][i] = cols["left"][i] = cols["right"][i] = _grow.LEAF
                    cols["value"][i] = node["value"]
            except (KeyError, TypeError) as exc:
                raise ModelFormatError(f"malformed tree node: {exc}") from exc
            return i

        visit(root)
        return cls(n_features=n_features, **cols)


def grow_tree(
    X,
    objective: VarianceReduction | NewtonGain,
    *,
    max_depth: int = 6,
    min_samples_leaf: int = 1,
    min_gain: float = 0.0,
    feature_subsample="all",
    lambda_l2: float = 0.0,
    alpha_l1: float = 0.0,
    gamma_complexity: float = 0.0,
    random_state=None,
    sample_indices=None,
) -> TreeStructure:
    """Grow one tree greedily, depth first.

    ``sample_indices`` selects (possibly repeated) training rows, which is how
    bootstrap resamples are passed in without copying ``X``. Candidate
    features per node are drawn from ``random_state`` only when
    ``feature_subsample`` selects fewer than all features.
    """
    X = as_float_matrix(X)
    n, d = X.shape
    _check_tree_params(max_depth, min_samples_leaf, min_gain, lambda_l2, alpha_l1, gamma_complexity)

    if isinstance(objective, VarianceReduction):
        grad = as_float_vector(objective.targets, n, "targets")
        hess = np.ones(n)
        mode = _grow.MODE_VARIANCE
    elif isinstance(objective, NewtonGain):
        grad = as_float_vector(objective.gradients, n, "gradients")
        hess = as_float_vector(objective.hessians, n, "hessians")
        if np.any(hess <= 0):
            raise ClvStackError("hessians must be strictly positive")
        mode = _grow.MODE_NEWTON
    else:
        raise TypeError(f"unsupported objective {type(objective).__name__}")

    if sample_indices is None:
        rows = np.arange(n, dtype=np.int64)
    else:
        rows = np.asarray(sample_indices, dtype=np.int64)
        if rows.size == 0:
            raise EmptyInputError("sample_indices is empty")
        if rows.min() < 0 or rows.max() >= n:
            raise ClvStackError("sample_indices out of range")

    n_sub = resolve_feature_subsample(feature_subsample, d)
    if n_sub < d:
        rng = np.random.default_rng(random_state)
        uniforms = rng.random((2 * len(rows) + 1) * n_sub)
    else:
        uniforms = np.empty(0)

    arrays = _grow.grow(
        X,
        grad,
        hess,
        rows,
        mode,
        int(max_depth),
        int(min_samples_leaf),
        float(min_gain),
        n_sub,
        uniforms,
        float(lambda_l2),
        float(alpha_l1),
        float(gamma_complexity),
    )
    return TreeStructure(*arrays, n_features=d)


class RegressionTree(RegressorMixin, BaseEstimator):
    """Least-squares CART regressor.

    Every midpoint between consecutive distinct feature values is a candidate
    threshold. Ties in gain go to the lowest feature index, then the lowest
    threshold.

    Parameters
    ----------
    max_depth : int, default=6
        Maximum depth; the root has depth 0.
    min_samples_leaf : int, default=1
        Minimum number of training rows in each leaf.
    min_gain : float, default=0.0
        A split is kept only if its SSE reduction is strictly larger.
    feature_subsample : {"all", "sqrt"} or float, default="all"
        Candidate features drawn without replacement at every node.
    random_state : int or None, default=None
        Seed for feature subsampling.
    """

    def __init__(self, max_depth=6, min_samples_leaf=1, min_gain=0.0, feature_subsample="all", random_state=None):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.min_gain = min_gain
        self.feature_subsample = feature_subsample
        self.random_state = random_state

    def fit(self, X, y):
        X = as_float_matrix(X)
        y = as_float_vector(y, X.shape[0], "y")
        self.tree_ = grow_tree(
            X,
            VarianceReduction(y),
            max_depth=self.max_depth,
            min_samples_leaf=self.min_samples_leaf,
            min_gain=self.min_gain,
            feature_subsample=self.feature_subsample,
            random_state=self.random_state,
        )
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "tree_")
        X = as_float_matrix(X)
        check_n_features(X, self.n_features_in_)
        return self.tree_.predict(X)


def fit_tree(X, objective, params: dict | None = None, rng_seed=None) -> TreeStructure:
    return grow_tree(X, objective, random_state=rng_seed, **(params or {}))


def predict_tree(tree: TreeStructure, x) -> float:
    """Route a single feature vector to its leaf value."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ClvStackError("predict_tree expects a single feature vector")
    check_n_features(x[None, :], tree.n_features)
    if not np.all(np.isfinite(x)):
        raise ClvStackError("feature vector contains non-finite values")
    return float(tree.predict(x[None, :])[0])

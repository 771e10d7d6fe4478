"""Bagged and boosted tree ensembles built on :mod:`clvstack.tree`."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_float_matrix, as_float_vector, check_n_features
from .exceptions import ClvStackError
from .tree import NewtonGain, VarianceReduction, grow_tree


def _tree_rng(random_state, index: int) -> np.random.Generator:
    # Per-tree streams keyed by tree index keep results independent of the
    # order in which worker threads finish.
    seed = 0 if random_state is None else int(random_state)
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


class RandomForestRegressor(RegressorMixin, BaseEstimator):
    """Bootstrap-aggregated least-squares trees.

    Parameters
    ----------
    n_estimators : int, default=200
    max_depth : int, default=50
    feature_subsample : {"all", "sqrt"} or float, default="sqrt"
        Features considered at each node.
    min_samples_leaf : int, default=1
    min_gain : float, default=0.0
    bootstrap : bool, default=True
        Draw ``n`` rows with replacement for every tree.
    random_state : int, default=0
    n_jobs : int, default=1
        Worker threads for tree fitting. Does not affect the fitted model.
    """

    def __init__(
        self,
        n_estimators=200,
        max_depth=50,
        feature_subsample="sqrt",
        min_samples_leaf=1,
        min_gain=0.0,
        bootstrap=True,
        random_state=0,
        n_jobs=1,
    ):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.feature_subsample = feature_subsample
        self.min_samples_leaf = min_samples_leaf
        self.min_gain = min_gain
        self.bootstrap = bootstrap
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _fit_one(self, X, y, index):
        rng = _tree_rng(self.random_state, index)
        n = X.shape[0]
        rows = rng.integers(0, n, size=n) if self.bootstrap else None
        return grow_tree(
            X,
            VarianceReduction(y),
            max_depth=self.max_depth,
            min_samples_leaf=self.min_samples_leaf,
            min_gain=self.min_gain,
            feature_subsample=self.feature_subsample,
            random_state=rng,
            sample_indices=rows,
        )

    def fit(self, X, y):
        if int(self.n_estimators) != self.n_estimators or self.n_estimators < 1:
            raise ClvStackError(f"n_estimators must be a positive integer, got {self.n_estimators!r}")
        X = as_float_matrix(X)
        y = as_float_vector(y, X.shape[0], "y")
        indices = range(int(self.n_estimators))
        if self.n_jobs and self.n_jobs > 1:
            with ThreadPoolExecutor(max_workers=self.n_jobs) as pool:
                trees = list(pool.map(lambda t: self._fit_one(X, y, t), indices))
        else:
            trees = [self._fit_one(X, y, t) for t in indices]
        self.estimators_ = trees
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "estimators_")
        X = as_float_matrix(X)
        check_n_features(X, self.n_features_in_)
        total = np.zeros(X.shape[0])
        for tree in self.estimators_:
            total += tree.predict(X)
        return total / len(self.estimators_)


class GradientBoostedTrees(RegressorMixin, BaseEstimator):
    """Second-order gradient boosting on squared error.

    Each round fits a Newton-mode tree to the gradients ``pred - y`` with unit
    hessians. Leaf weights are ``-soft(G, alpha_l1) / (H + lambda_l2)`` and a
    split is kept when its regularised gain, already net of
    ``gamma_complexity``, is positive. Boosting stops early when a round
    produces a single leaf of weight 0.

    Parameters
    ----------
    n_estimators : int, default=100
    learning_rate : float, default=0.3
    max_depth : int, default=6
    lambda_l2 : float, default=1.0
    alpha_l1 : float, default=0.0
    gamma_complexity : float, default=0.0
    min_samples_leaf : int, default=1
    random_state : int, default=0
        Unused by the level-wise learner; kept for a uniform seeding interface.
    """

    def __init__(
        self,
        n_estimators=100,
        learning_rate=0.3,
        max_depth=6,
        lambda_l2=1.0,
        alpha_l1=0.0,
        gamma_complexity=0.0,
        min_samples_leaf=1,
        random_state=0,
    ):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.lambda_l2 = lambda_l2
        self.alpha_l1 = alpha_l1
        self.gamma_complexity = gamma_complexity
        self.min_samples_leaf = min_samples_leaf
        self.random_state = random_state

    def fit(self, X, y):
        if int(self.n_estimators) != self.n_estimators or self.n_estimators < 0:
            raise ClvStackError(f"n_estimators must be a non-negative integer, got {self.n_estimators!r}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ClvStackError(f"learning_rate must be in (0, 1], got {self.learning_rate!r}")
        X = as_float_matrix(X)
        y = as_float_vector(y, X.shape[0], "y")
        self.base_score_ = float(np.mean(y))
        pred = np.full(X.shape[0], self.base_score_)
        hess = np.ones(X.shape[0])
        trees = []
        for _ in range(int(self.n_estimators)):
            tree = grow_tree(
                X,
                NewtonGain(pred - y, hess),
                max_depth=self.max_depth,
                min_samples_leaf=self.min_samples_leaf,
                lambda_l2=self.lambda_l2,
                alpha_l1=self.alpha_l1,
                gamma_complexity=self.gamma_complexity,
            )
            if tree.node_count == 1 and tree.value[0] == 0.0:
                break
            pred += self.learning_rate * tree.predict(X)
            trees.append(tree)
        self.estimators_ = trees
        self.n_features_in_ = X.shape[1]
        return self

    def staged_predict(self, X):
        """Yield predictions after 0, 1, ..., len(estimators_) rounds."""
        check_is_fitted(self, "estimators_")
        X = as_float_matrix(X)
        check_n_features(X, self.n_features_in_)
        pred = np.full(X.shape[0], self.base_score_)
        yield pred.copy()
        for tree in self.estimators_:
            pred += self.learning_rate * tree.predict(X)
            yield pred.copy()

    def predict(self, X):
        check_is_fitted(self, "estimators_")
        X = as_float_matrix(X)
        check_n_features(X, self.n_features_in_)
        total = np.zeros(X.shape[0])
        for tree in self.estimators_:
            total += tree.predict(X)
        return self.base_score_ + self.learning_rate * total


# Reference configurations for the reproduction experiment.
def xgboost_config(**overrides) -> GradientBoostedTrees:
    params = dict(n_estimators=10, learning_rate=0.3, max_depth=6, lambda_l2=1.0, alpha_l1=0.0, gamma_complexity=0.0)
    params.update(overrides)
    return GradientBoostedTrees(**params)


def lightgbm_config(**overrides) -> GradientBoostedTrees:
    params = dict(n_estimators=200, learning_rate=0.02, max_depth=2)
    params.update(overrides)
    return GradientBoostedTrees(**params)


def forest_config(**overrides) -> RandomForestRegressor:
    params = dict(n_estimators=200, feature_subsample="sqrt", max_depth=50)
    params.update(overrides)
    return RandomForestRegressor(**params)

"""Cross-validated stacking with an elastic-net meta-learner.

Base regressors are fitted ``k`` times on ``k - 1`` folds and predict the
held-out fold, giving one out-of-fold (OOF) prediction per row and base model.
The meta-learner is trained on those OOF columns, optionally alongside the
original features. Predictions use base models refitted on all rows.
"""
from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, clone
from sklearn.utils.validation import check_is_fitted

from ._validation import as_float_matrix, as_float_vector, check_n_features
from .exceptions import ClvStackError
from .linear import ElasticNet

FULL_FIT = "full"


@dataclass(frozen=True)
class FoldPlan:
    assignment: np.ndarray
    k: int

    def train_test(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        test = self.assignment == fold
        return np.flatnonzero(~test), np.flatnonzero(test)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)


def make_folds(n: int, k: int, seed) -> FoldPlan:
    """Shuffle rows with ``seed`` and cut them into ``k`` near-equal blocks."""
    if int(k) != k or k < 2:
        raise ClvStackError(f"k must be an integer >= 2, got {k!r}")
    if k > n:
        raise ClvStackError(f"cannot make {k} folds from {n} rows")
    order = np.random.default_rng(seed).permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    for fold, block in enumerate(np.array_split(order, k)):
        assignment[block] = fold
    return FoldPlan(assignment, int(k))


def derive_seed(global_seed, name: str, fold) -> int:
    """Stable 63-bit seed for one (learner name, fold) fit."""
    key = f"{global_seed}\x1f{name}\x1f{fold}".encode()
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1


def _seeded(estimator, seed: int):
    est = clone(estimator)
    if "random_state" in est.get_params(deep=False):
        est.set_params(random_state=seed)
    return est


def _run(tasks, fn, n_jobs):
    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def oof_predictions(X, y, regressors, plan: FoldPlan, global_seed=0, n_jobs=1) -> np.ndarray:
    """Matrix of held-out predictions, one column per named regressor."""
    X = as_float_matrix(X)
    y = as_float_vector(y, X.shape[0], "y")
    if plan.assignment.shape[0] != X.shape[0]:
        raise ClvStackError("fold plan does not match the number of rows")
    tasks = [(j, name, est, fold) for j, (name, est) in enumerate(regressors) for fold in range(plan.k)]

    def fit_predict(task):
        j, name, est, fold = task
        train, test = plan.train_test(fold)
        model = _seeded(est, derive_seed(global_seed, name, fold)).fit(X[train], y[train])
        return j, test, np.asarray(model.predict(X[test]), dtype=np.float64)

    oof = np.full((X.shape[0], len(regressors)), np.nan)
    for j, test, pred in _run(tasks, fit_predict, n_jobs):
        oof[test, j] = pred
    return oof


class StackingCVRegressor(RegressorMixin, BaseEstimator):
    """Two-level stack trained on out-of-fold base predictions.

    Parameters
    ----------
    regressors : list of (str, estimator)
        Named base regressors. Names must be unique; they also key the seeds,
        so reordering the list does not change any base fit. The meta-learner
        sees base columns sorted by name, so the fitted stack does not depend
        on list order either.
    meta_regressor : ElasticNet, default=None
        Second-level model. ``None`` means ``ElasticNet()`` with its defaults.
    k_folds : int, default=5
    use_features_in_secondary : bool, default=True
        Append the original features to the meta-learner's inputs.
    random_state : int, default=42
    n_jobs : int, default=1
        Worker threads for base fits. Does not affect the fitted model.
    feature_names : list of str, default=None
        Names for the original columns in ``meta_feature_names_``.
    """

    def __init__(
        self,
        regressors,
        meta_regressor=None,
        k_folds=5,
        use_features_in_secondary=True,
        random_state=42,
        n_jobs=1,
        feature_names=None,
    ):
        self.regressors = regressors
        self.meta_regressor = meta_regressor
        self.k_folds = k_folds
        self.use_features_in_secondary = use_features_in_secondary
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.feature_names = feature_names

    def _check_regressors(self):
        if not self.regressors:
            raise ClvStackError("at least one base regressor is required")
        names = [name for name, _ in self.regressors]
        if len(set(names)) != len(names):
            raise ClvStackError(f"base regressor names must be unique, got {names}")
        return names

    def _meta_design(self, base_columns: np.ndarray, X: np.ndarray) -> np.ndarray:
        if self.use_features_in_secondary:
            return np.hstack([base_columns, X])
        return base_columns

    def fit(self, X, y):
        names = self._check_regressors()
        X = as_float_matrix(X)
        y = as_float_vector(y, X.shape[0], "y")
        n, d = X.shape

        plan = make_folds(n, self.k_folds, self.random_state)
        oof = oof_predictions(X, y, self.regressors, plan, self.random_state, self.n_jobs)
        self.meta_order_ = np.argsort(np.array(names, dtype=object), kind="stable")
        meta = clone(self.meta_regressor) if self.meta_regressor is not None else ElasticNet()
        meta.fit(self._meta_design(oof[:, self.meta_order_], X), y)

        def refit(pair):
            name, est = pair
            return _seeded(est, derive_seed(self.random_state, name, FULL_FIT)).fit(X, y)

        self.regressors_ = _run(list(self.regressors), refit, self.n_jobs)
        self.meta_regressor_ = meta
        self.fold_plan_ = plan
        self.oof_predictions_ = oof
        feature_names = list(self.feature_names) if self.feature_names is not None else [f"x{i}" for i in range(d)]
        self.meta_feature_names_ = [names[i] for i in self.meta_order_] + (feature_names if self.use_features_in_secondary else [])
        self.n_features_in_ = d
        return self

    def base_predictions(self, X) -> np.ndarray:
        check_is_fitted(self, "regressors_")
        X = as_float_matrix(X)
        check_n_features(X, self.n_features_in_)
        return np.column_stack([np.asarray(m.predict(X), dtype=np.float64) for m in self.regressors_])

    def predict(self, X):
        X = as_float_matrix(X)
        base = self.base_predictions(X)[:, self.meta_order_]
        return self.meta_regressor_.predict(self._meta_design(base, X))

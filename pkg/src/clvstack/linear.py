"""Elastic-net regression fitted by cyclic coordinate descent."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_float_matrix, as_float_vector, check_n_features
from .exceptions import ClvStackError


def soft_threshold(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


class ElasticNet(RegressorMixin, BaseEstimator):
    """Linear model with combined L1 and L2 penalties.

    Minimises::

        1/(2n) ||y - X b - c||^2 + alpha * l1_ratio * ||b||_1
            + alpha * (1 - l1_ratio) / 2 * ||b||_2^2

    over the standardized columns when ``standardize`` is on. Columns are
    always centred, so the intercept is the mean residual. Constant columns
    get a zero coefficient.

    Parameters
    ----------
    alpha : float, default=1e-3
        Overall penalty strength.
    l1_ratio : float, default=0.5
        Share of the penalty given to the L1 term.
    max_sweeps : int, default=1000
    tol : float, default=1e-8
        Stop once no coefficient moves more than this in one sweep
        (standardized scale).
    standardize : bool, default=True

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
        Coefficients on the original feature scale.
    intercept_ : float
    mean_, scale_ : ndarray of shape (n_features,)
        Column centring and scaling used during the fit.
    objective_path_ : list of float
        Penalised objective after each sweep.
    """

    def __init__(self, alpha=1e-3, l1_ratio=0.5, max_sweeps=1000, tol=1e-8, standardize=True, random_state=None):
        self.alpha = alpha
        self.l1_ratio = l1_ratio
        self.max_sweeps = max_sweeps
        self.tol = tol
        self.standardize = standardize
        # Accepted for a uniform seeding interface; the fit is deterministic.
        self.random_state = random_state

    def _check_params(self):
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ClvStackError(f"alpha must be non-negative, got {self.alpha!r}")
        if not 0.0 <= self.l1_ratio <= 1.0:
            raise ClvStackError(f"l1_ratio must be in [0, 1], got {self.l1_ratio!r}")
        if int(self.max_sweeps) != self.max_sweeps or self.max_sweeps < 1:
            raise ClvStackError(f"max_sweeps must be a positive integer, got {self.max_sweeps!r}")
        if not self.tol > 0:
            raise ClvStackError(f"tol must be positive, got {self.tol!r}")

    def fit(self, X, y):
        self._check_params()
        X = as_float_matrix(X)
        y = as_float_vector(y, X.shape[0], "y")
        n, d = X.shape

        mean = X.mean(axis=0)
        active = np.ptp(X, axis=0) > 0
        scale = np.ones(d)
        if self.standardize:
            std = X.std(axis=0)
            scale[active] = std[active]
        y_mean = float(y.mean())

        Z = (X[:, active] - mean[active]) / scale[active]
        yc = y - y_mean
        gram = Z.T @ Z / n
        zy = Z.T @ yc / n
        yy = float(yc @ yc) / n

        l1 = self.alpha * self.l1_ratio
        l2 = self.alpha * (1.0 - self.l1_ratio)
        k = Z.shape[1]
        beta = np.zeros(k)

        def objective(b):
            loss = 0.5 * (yy - 2.0 * b @ zy + b @ gram @ b)
            return float(loss + l1 * np.abs(b).sum() + 0.5 * l2 * (b @ b))

        path = []
        n_iter = 0
        for sweep in range(int(self.max_sweeps)):
            max_change = 0.0
            for j in range(k):
                partial = zy[j] - gram[j] @ beta + gram[j, j] * beta[j]
                new = soft_threshold(partial, l1) / (gram[j, j] + l2)
                change = abs(new - beta[j])
                if change > max_change:
                    max_change = change
                beta[j] = new
            path.append(objective(beta))
            n_iter = sweep + 1
            if max_change < self.tol:
                break

        coef = np.zeros(d)
        coef[active] = beta / scale[active]
        self.coef_ = coef
        self.intercept_ = y_mean - float(mean @ coef)
        self.mean_ = mean
        self.scale_ = scale
        self.n_iter_ = n_iter
        self.objective_path_ = path
        self.n_features_in_ = d
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = as_float_matrix(X)
        check_n_features(X, self.n_features_in_)
        return self.intercept_ + X @ self.coef_

    def standardized_coef(self) -> np.ndarray:
        """Coefficients on the standardized scale used by the solver."""
        check_is_fitted(self, "coef_")
        return self.coef_ * self.scale_

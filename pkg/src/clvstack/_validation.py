"""Input validation shared by the estimators."""
import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import ClvStackError, EmptyInputError


def as_float_matrix(X) -> np.ndarray:
    if hasattr(X, "shape") and len(getattr(X, "shape")) == 2 and X.shape[0] == 0:
        raise EmptyInputError("X has no rows")
    try:
        X = check_array(X, dtype=np.float64, ensure_all_finite=True, order="C")
    except ValueError as exc:
        if "minimum of 1" in str(exc):
            raise EmptyInputError(str(exc)) from exc
        raise ClvStackError(str(exc)) from exc
    return X


def as_float_vector(v, n: int, name: str) -> np.ndarray:
    v = np.ascontiguousarray(np.asarray(v, dtype=np.float64).ravel())
    if v.shape[0] != n:
        raise ClvStackError(f"{name} has length {v.shape[0]}, expected {n}")
    if not np.all(np.isfinite(v)):
        raise ClvStackError(f"{name} contains non-finite values")
    return v


def check_n_features(X: np.ndarray, expected: int) -> None:
    if X.shape[1] != expected:
        raise ClvStackError(f"X has {X.shape[1]} features, model was fitted with {expected}")

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.dummy import DummyRegressor

from clvstack import persist
from clvstack.ensemble import GradientBoostedTrees, RandomForestRegressor
from clvstack.exceptions import ClvStackError
from clvstack.linear import ElasticNet
from clvstack.stack import StackingCVRegressor, derive_seed, make_folds, oof_predictions


class ColumnEcho(RegressorMixin, BaseEstimator):
    """Predicts one input column verbatim; stands in for a perfect base model."""

    def __init__(self, column=0):
        self.column = column

    def fit(self, X, y):
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        return np.asarray(X)[:, self.column]


class Constant(RegressorMixin, BaseEstimator):
    def __init__(self, value=0.0):
        self.value = value

    def fit(self, X, y):
        return self

    def predict(self, X):
        return np.full(len(X), self.value)


def test_fold_sizes():
    plan = make_folds(4, 2, seed=0)
    assert sorted(plan.sizes()) == [2, 2]
    plan = make_folds(5, 2, seed=0)
    assert sorted(plan.sizes()) == [2, 3]
    np.testing.assert_array_equal(make_folds(50, 7, 3).assignment, make_folds(50, 7, 3).assignment)


@pytest.mark.parametrize("n,k", [(3, 4), (5, 1)])
def test_fold_errors(n, k):
    with pytest.raises(ClvStackError):
        make_folds(n, k, 0)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 200), st.integers(2, 20), st.integers(0, 2**32))
def test_fold_partition(n, k, seed):
    k = min(k, n)
    plan = make_folds(n, k, seed)
    sizes = plan.sizes()
    assert sizes.sum() == n and sizes.max() - sizes.min() <= 1
    seen = np.concatenate([plan.train_test(f)[1] for f in range(k)])
    assert sorted(seen.tolist()) == list(range(n))


def test_leave_one_out_mean():
    X = np.zeros((3, 1))
    y = np.array([0.0, 3.0, 6.0])
    oof = oof_predictions(X, y, [("mean", DummyRegressor())], make_folds(3, 3, 0))
    np.testing.assert_allclose(oof[:, 0], [4.5, 3.0, 1.5])


def test_oof_shape(rng):
    X = rng.normal(size=(30, 2))
    y = rng.normal(size=30)
    regs = [("a", DummyRegressor()), ("b", ElasticNet()), ("c", Constant(1.0))]
    oof = oof_predictions(X, y, regs, make_folds(30, 5, 1))
    assert oof.shape == (30, 3) and np.all(np.isfinite(oof))


def test_perfect_base_gets_unit_weight(rng):
    x = rng.normal(size=(200, 1))
    y = 3 * x[:, 0] + 1
    X = np.column_stack([y, x])
    stack = StackingCVRegressor(
        [("oracle", ColumnEcho(0))],
        meta_regressor=ElasticNet(alpha=1e-9),
        use_features_in_secondary=False,
    ).fit(X, y)
    assert stack.meta_regressor_.coef_[0] == pytest.approx(1.0, abs=1e-3)
    assert stack.meta_regressor_.intercept_ == pytest.approx(0.0, abs=1e-3)


def test_meta_width_with_passthrough(rng):
    X = rng.normal(size=(40, 4))
    y = rng.normal(size=40)
    stack = StackingCVRegressor(
        [("a", DummyRegressor()), ("b", ElasticNet()), ("c", GradientBoostedTrees(n_estimators=3))],
        feature_names=["latetime", "earlytime", "freq", "freq_3m"],
    ).fit(X, y)
    assert stack.meta_regressor_.coef_.shape == (7,)
    assert stack.meta_feature_names_ == ["a", "b", "c", "latetime", "earlytime", "freq", "freq_3m"]
    off = StackingCVRegressor([("a", DummyRegressor())], use_features_in_secondary=False).fit(X, y)
    assert off.meta_regressor_.coef_.shape == (1,)


def test_predict_uses_meta_on_base_columns():
    X = np.zeros((10, 2))
    y = np.arange(10.0)
    stack = StackingCVRegressor([("two", Constant(2.0)), ("four", Constant(4.0))], use_features_in_secondary=False).fit(X, y)
    meta = ElasticNet()
    meta.coef_, meta.intercept_, meta.n_features_in_ = np.array([0.5, 0.5]), 0.0, 2
    stack.meta_regressor_ = meta
    assert stack.predict(np.random.default_rng(0).normal(size=(3, 2))).tolist() == [3.0, 3.0, 3.0]


def test_single_base_column_passthrough():
    # meta columns are name-sorted: const, echo, x0, x1
    X = np.arange(12.0).reshape(6, 2)
    y = np.arange(6.0)
    stack = StackingCVRegressor([("echo", ColumnEcho(1)), ("const", Constant(9.0))], k_folds=2).fit(X, y)
    meta = ElasticNet()
    meta.coef_, meta.intercept_, meta.n_features_in_ = np.array([0.0, 1.0, 0, 0]), 0.0, 4
    stack.meta_regressor_ = meta
    np.testing.assert_array_equal(stack.predict(X), X[:, 1])


def test_base_order_invariance(rng):
    X = rng.normal(size=(120, 3))
    y = X[:, 0] ** 2 + X[:, 1] + rng.normal(scale=0.1, size=120)
    bases = [
        ("rf", RandomForestRegressor(n_estimators=10, max_depth=6)),
        ("gb", GradientBoostedTrees(n_estimators=10)),
        ("en", ElasticNet()),
    ]
    a = StackingCVRegressor(bases, random_state=5).fit(X, y)
    b = StackingCVRegressor(bases[::-1], random_state=5).fit(X, y)
    np.testing.assert_allclose(a.predict(X), b.predict(X), atol=1e-8, rtol=0)
    assert a.meta_feature_names_ == b.meta_feature_names_
    np.testing.assert_allclose(a.meta_regressor_.coef_, b.meta_regressor_.coef_, atol=1e-8)


def test_seeds_stable_and_distinct():
    assert derive_seed(42, "rf", 0) == derive_seed(42, "rf", 0)
    assert len({derive_seed(42, n, f) for n in ("rf", "gb") for f in range(5)}) == 10
    assert 0 <= derive_seed(1, "x", "full") < 2**63


def test_unique_names_required(rng):
    with pytest.raises(ClvStackError):
        StackingCVRegressor([("a", DummyRegressor()), ("a", ElasticNet())]).fit(rng.normal(size=(10, 1)), np.zeros(10))
    with pytest.raises(ClvStackError):
        StackingCVRegressor([]).fit(rng.normal(size=(10, 1)), np.zeros(10))


def test_degenerate_linear_stack(rng):
    X = rng.normal(size=(150, 3))
    y = X @ [1.0, 0.5, -2.0] + rng.normal(scale=0.5, size=150)
    stack = StackingCVRegressor(
        [("en", ElasticNet())], meta_regressor=ElasticNet(alpha=0.0), use_features_in_secondary=False
    ).fit(X, y)
    oof_corr = np.corrcoef(stack.oof_predictions_[:, 0], y)[0, 1]
    stack_corr = np.corrcoef(stack.predict(X), y)[0, 1]
    assert stack_corr >= oof_corr


def test_parallel_matches_sequential(rng, tmp_path):
    X = rng.normal(size=(80, 4))
    y = rng.normal(size=80)
    bases = [("rf", RandomForestRegressor(n_estimators=5)), ("en", ElasticNet())]
    a = StackingCVRegressor(bases, n_jobs=1).fit(X, y)
    b = StackingCVRegressor(bases, n_jobs=4).fit(X, y)
    assert persist.dumps(persist.model_to_dict(a)) == persist.dumps(persist.model_to_dict(b))
    path = tmp_path / "stack.json"
    persist.save_model(a, path)
    np.testing.assert_array_equal(persist.load_model(path).predict(X), a.predict(X))

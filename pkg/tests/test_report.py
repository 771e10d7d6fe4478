import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clvstack.ensemble import GradientBoostedTrees, RandomForestRegressor
from clvstack.exceptions import ClvStackError, EmptyInputError
from clvstack.report import ImportanceReport, compute_importance, evaluate, mae, rank_features, rmse
from clvstack.tree import TreeStructure

NAMES = ["a", "b"]


def stump(feature, gain, cover, n_features=2):
    return TreeStructure(
        [feature, -1, -1], [0.5, 0, 0], [1, -1, -1], [2, -1, -1],
        [0.0, -1.0, 1.0], [gain, 0, 0], [cover, cover / 2, cover / 2], [int(cover), 1, 1],
        n_features=n_features,
    )


def leaf(n_features=2):
    return TreeStructure([-1], [0.0], [-1], [-1], [1.0], [0.0], [4.0], [4], n_features=n_features)


def forest_of(*trees):
    model = RandomForestRegressor(n_estimators=len(trees))
    model.estimators_, model.n_features_in_ = list(trees), trees[0].n_features
    return model


def test_metric_hand_values():
    assert rmse([1, 2, 3], [2, 2, 5]) == pytest.approx(math.sqrt(5 / 3), rel=1e-15)
    assert mae([1, 2, 3], [2, 2, 5]) == 1.0
    assert rmse([0], [3]) == 3.0 and mae([0], [3]) == 3.0
    report = evaluate([1, 2, 3], [2, 2, 5], keep_residuals=True)
    assert report.to_dict() == {"rmse": rmse([1, 2, 3], [2, 2, 5]), "mae": 1.0, "n": 3, "residuals": [-1.0, 0.0, -2.0]}
    assert "residuals" not in evaluate([1], [1]).to_dict()


def test_metric_errors():
    with pytest.raises(ClvStackError):
        rmse([1, 2], [1])
    with pytest.raises(EmptyInputError):
        mae([], [])


vectors = st.integers(1, 50).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(-1e6, 1e6), min_size=n, max_size=n),
        st.lists(st.floats(-1e6, 1e6), min_size=n, max_size=n),
    )
)


@settings(max_examples=200)
@given(vectors)
def test_metric_properties(pair):
    p, a = pair
    assert rmse(p, a) == rmse(a, p) and mae(p, a) == mae(a, p)
    assert rmse(p, a) >= mae(p, a) * (1 - 1e-12)
    assert rmse(p, p) == 0.0


def test_importance_single_split():
    report = compute_importance(forest_of(stump(0, 4.0, 10.0)), NAMES)
    a, b = report.features["a"], report.features["b"]
    assert (a.weight, a.gain, a.cover, a.total_gain, a.total_cover) == (1, 4.0, 10.0, 4.0, 10.0)
    assert (b.weight, b.gain, b.total_gain) == (0, 0.0, 0.0)


def test_importance_averages_over_splits():
    report = compute_importance(forest_of(stump(1, 2.0, 6.0), stump(1, 6.0, 2.0)), NAMES)
    b = report.features["b"]
    assert (b.weight, b.gain, b.total_gain, b.cover, b.total_cover) == (2, 4.0, 8.0, 4.0, 8.0)


def test_leaf_only_model_has_zero_importance():
    report = compute_importance(forest_of(leaf(), leaf()), NAMES)
    assert all(row[k] == 0 for row in report.to_rows() for k in ("weight", "gain", "cover"))


def test_importance_is_additive_over_trees(rng):
    X = rng.normal(size=(100, 3))
    y = X[:, 0] + rng.normal(size=100)
    model = GradientBoostedTrees(n_estimators=6, max_depth=3).fit(X, y)
    names = ["p", "q", "r"]
    whole = compute_importance(model, names)
    parts = [compute_importance(forest_of(t), names) for t in model.estimators_]
    for name in names:
        total = sum(p.features[name].total_gain for p in parts)
        assert whole.features[name].total_gain == pytest.approx(total, rel=1e-9)
        assert whole.features[name].weight == sum(p.features[name].weight for p in parts)


def test_rank_ties_break_by_name():
    report = compute_importance(forest_of(stump(1, 5.0, 3.0), stump(0, 5.0, 3.0)), ["zeta", "alpha"])
    assert rank_features(report, "gain") == ["alpha", "zeta"]
    assert rank_features(report, "weight") == ["alpha", "zeta"]
    with pytest.raises(ClvStackError):
        rank_features(report, "nope")
    with pytest.raises(EmptyInputError):
        rank_features(ImportanceReport(), "gain")


def test_name_count_checked():
    with pytest.raises(ClvStackError):
        compute_importance(forest_of(leaf()), ["only"])
    with pytest.raises(ClvStackError):
        compute_importance(object(), NAMES)


def test_csv_output():
    text = compute_importance(forest_of(stump(0, 4.0, 10.0)), NAMES).to_csv()
    lines = text.splitlines()
    assert lines[0] == "feature,weight,gain,cover,total_gain,total_cover"
    assert lines[1] == "a,1,4.0,10.0,4.0,10.0"
    assert np.isclose(float(lines[2].split(",")[2]), 0.0)

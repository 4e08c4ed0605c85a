import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from progrock import tree_ensembles as te
from progrock.errors import ConfigurationError


def _separable(n=200, d=10, seed=0):
    """One informative feature (index 3) plus noise."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = (X[:, 3] > 0.1).astype(float)
    return X, y


def _acc(model, X, y):
    return float(np.mean(te.predict_proba(model, X).argmax(axis=1) == y))


@pytest.mark.parametrize("counts, expected", [((4, 0), 0.0), ((2, 2), 0.5), ((3, 1), 0.375)])
def test_gini(counts, expected):
    assert te.gini(counts) == pytest.approx(expected)


def test_single_feature_depth_one():
    X = np.array([[0.0], [1.0], [2.0], [10.0], [11.0], [12.0]])
    y = np.array([0, 0, 0, 1, 1, 1.0])
    tree = te.fit_tree(X, y)
    assert tree.depth() == 1
    assert tree.threshold[0] == pytest.approx(6.0)
    np.testing.assert_array_equal(tree.predict_proba(X).argmax(axis=1), y)


def test_single_class_single_leaf():
    tree = te.fit_tree(np.random.default_rng(0).normal(size=(10, 3)), np.ones(10))
    assert tree.n_nodes == 1
    np.testing.assert_array_equal(tree.predict_proba(np.zeros((2, 3))), [[0, 1], [0, 1]])


def test_xor():
    X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]] * 5, dtype=float)
    y = np.logical_xor(X[:, 0], X[:, 1]).astype(float)
    tree = te.fit_tree(X, y, te.TreeParams(max_depth=2))
    assert tree.depth() == 2
    np.testing.assert_array_equal(tree.predict_proba(X).argmax(axis=1), y)


def test_unlimited_tree_memorizes():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(80, 5))
    y = rng.integers(0, 2, 80).astype(float)
    tree = te.fit_tree(X, y)
    np.testing.assert_array_equal(tree.predict_proba(X).argmax(axis=1), y)


def test_best_split_tie_breaks_to_lowest_feature():
    X = np.array([[0, 0], [0, 0], [1, 1], [1, 1]], dtype=float)
    y = np.array([0, 0, 1, 1.0])
    tree = te.fit_tree(X, y)
    assert tree.feature[0] == 0


def test_min_samples_leaf():
    X, y = _separable(60)
    tree = te.fit_tree(X, y, te.TreeParams(min_samples_leaf=7))
    leaves = tree.feature == -1
    assert tree.n_samples[leaves].min() >= 7


@pytest.mark.parametrize("preset", [te.random_forest_config, te.extra_trees_config, te.bagging_config])
def test_presets_fit_training_data(preset):
    X, y = _separable(200)
    model = te.fit_forest(X, y, preset(seed=0))
    assert _acc(model, X, y) >= 0.99


def test_preset_sizes():
    assert te.random_forest_config().n_estimators == 101
    assert te.extra_trees_config().n_estimators == 100
    assert te.bagging_config().n_estimators == 50
    assert not te.extra_trees_config().bootstrap
    assert te.extra_trees_config().split_mode == "random"
    assert te.bagging_config().max_features == "all"


def test_single_tree_forest_matches_fit_tree():
    X, y = _separable(50)
    cfg = te.ForestConfig(n_estimators=1, bootstrap=False, max_features="all", split_mode="best")
    forest = te.fit_forest(X, y, cfg)
    tree = te.fit_tree(X, y)
    np.testing.assert_array_equal(te.predict_proba(forest, X), tree.predict_proba(X))


def test_forest_deterministic_and_parallel_invariant():
    X, y = _separable(80)
    a = te.to_arrays(te.fit_forest(X, y, te.random_forest_config(seed=3)))
    b = te.to_arrays(te.fit_forest(X, y, te.random_forest_config(seed=3, n_jobs=3)))
    assert a.keys() == b.keys()
    for k in a:
        assert a[k].tobytes() == b[k].tobytes()


def test_averaging():
    pure1 = te.DecisionTree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]),
                            np.array([[0.0, 1.0]]), np.array([1]), np.array([0.0]), 1)
    pure0 = te.DecisionTree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]),
                            np.array([[1.0, 0.0]]), np.array([1]), np.array([0.0]), 1)
    cfg = te.ForestConfig(n_estimators=2)
    x = np.zeros((1, 1))
    np.testing.assert_array_equal(te.predict_proba(te.ForestModel([pure1], cfg, 1), x), [[0, 1]])
    np.testing.assert_array_equal(te.predict_proba(te.ForestModel([pure1, pure0], cfg, 1), x), [[0.5, 0.5]])


def _planted(seed=0):
    """Feature 0 decides the label; four pure-noise features."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(200, 5))
    return X, (X[:, 0] > 0.1).astype(float)


@pytest.mark.parametrize("preset", [te.random_forest_config, te.bagging_config])
@pytest.mark.parametrize("seed", range(3))
def test_feature_importance_concentrates(preset, seed):
    X, y = _planted(seed)
    imp = te.feature_importance(te.fit_forest(X, y, preset(seed=seed)))
    assert imp.sum() == pytest.approx(1.0, abs=1e-9)
    assert imp[0] >= 0.9


def test_extra_trees_importance_ranks_informative_first():
    # random thresholds cut the informative feature imperfectly, so noise picks up a share
    X, y = _planted(0)
    imp = te.feature_importance(te.fit_forest(X, y, te.extra_trees_config(seed=0)))
    assert imp.sum() == pytest.approx(1.0, abs=1e-9)
    assert imp.argmax() == 0 and imp[0] > 0.5


def test_single_tree_importance_on_decisive_feature():
    X, y = _separable(200)
    imp = te.fit_tree(X, y).feature_importance()
    assert imp[3] / imp.sum() == pytest.approx(1.0)


def test_unused_feature_zero_importance():
    X, y = _separable(100)
    X = np.column_stack([X, np.zeros(100)])  # constant column cannot be split on
    imp = te.feature_importance(te.fit_forest(X, y, te.random_forest_config(seed=0)))
    assert imp[-1] == 0.0


def test_serialization_roundtrip():
    X, y = _separable(60)
    model = te.fit_forest(X, y, te.extra_trees_config(seed=2))
    back = te.from_arrays(te.to_arrays(model), te.config_dict(model))
    np.testing.assert_array_equal(te.predict_proba(back, X), te.predict_proba(model, X))
    assert back.config == model.config


def test_shape_mismatch():
    X, y = _separable(30)
    model = te.fit_forest(X, y, te.ForestConfig(n_estimators=3))
    with pytest.raises(ConfigurationError):
        te.predict_proba(model, X[:, :5])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 16), st.integers(10, 40), st.integers(1, 6))
def test_tree_reproduces_distinct_training_rows(seed, n, d):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = rng.integers(0, 2, n).astype(float)
    tree = te.fit_tree(X, y)
    np.testing.assert_array_equal(tree.predict_proba(X).argmax(axis=1), y)
    proba = tree.predict_proba(X)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)

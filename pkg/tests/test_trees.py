"""CART growth, forest bagging, importance, and determinism guarantees."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rarepred.dataset import Dataset, DatasetError, Feature
from rarepred.evaluate import auc
from rarepred.rng import generator
from rarepred.trees import (
    Forest,
    ForestHyper,
    fit_cart,
    fit_forest,
    gini,
    predict_forest,
    predict_tree,
    render_tree,
    variable_importance,
)


def array_dataset(X, y, names=None):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    names = names or [f"x{j}" for j in range(X.shape[1])]
    return Dataset(
        features=tuple(Feature(n, "continuous") for n in names),
        values=X,
        labels={"y": np.asarray(y, dtype=np.int64)},
    )


def xor_dataset(copies=25):
    cells = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    X = np.repeat(cells, copies, axis=0)
    y = np.repeat(np.array([0, 1, 1, 0]), copies)
    return array_dataset(X, y)


def blob_dataset(seed, n=400, informative=1.5):
    rng = generator(seed)
    X = rng.normal(size=(n, 3))
    eta = informative * X[:, 0]
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-eta))).astype(np.int64)
    return array_dataset(X, y)


class TestGini:
    def test_oracles(self):
        assert gini(np.array([3, 1])) == 0.375
        assert gini(np.array([5, 5])) == 0.5
        assert gini(np.array([4, 0])) == 0.0
        assert gini(np.array([0, 0])) == 0.0

    def test_three_classes(self):
        assert abs(gini(np.array([2, 2, 2])) - 2.0 / 3.0) < 1e-15

    def test_negative_rejected(self):
        with pytest.raises(DatasetError):
            gini(np.array([-1, 2]))


class TestCart:
    def test_single_clean_split(self):
        ds = array_dataset([1.0, 2.0, 3.0, 4.0], [0, 0, 1, 1])
        tree = fit_cart(ds, "y", min_split_obs=1)
        assert tree.n_nodes == 3
        assert tree.feature[0] == 0
        assert tree.threshold[0] == 2.5  # midpoint between 2 and 3
        np.testing.assert_array_equal(predict_tree(tree, ds), [0, 0, 1, 1])

    def test_leaf_probability_is_positive_share(self):
        ds = array_dataset([1.0, 1.0, 1.0, 5.0, 5.0], [0, 0, 1, 1, 1])
        tree = fit_cart(ds, "y", min_split_obs=1)
        p = predict_tree(tree, ds)
        np.testing.assert_allclose(p[:3], 1.0 / 3.0)
        np.testing.assert_allclose(p[3:], 1.0)

    def test_children_partition_parent(self):
        ds = blob_dataset(1, n=600)
        tree = fit_cart(ds, "y", cp=0.0005)
        for node in range(tree.n_nodes):
            if tree.feature[node] >= 0:
                l, r = tree.left[node], tree.right[node]
                assert tree.n_rows[l] + tree.n_rows[r] == tree.n_rows[node]
                assert tree.n_rows[l] >= tree.min_split_obs
                assert tree.n_rows[r] >= tree.min_split_obs

    def test_cp_monotone_node_count(self):
        ds = blob_dataset(2, n=800)
        sizes = [
            fit_cart(ds, "y", cp=cp).n_nodes
            for cp in (0.0, 0.0005, 0.002, 0.01, 0.05, 0.5)
        ]
        assert sizes == sorted(sizes, reverse=True)
        assert sizes[-1] == 1  # huge cp suppresses every split

    def test_gain_positive_when_cp_positive(self):
        ds = blob_dataset(3, n=500)
        tree = fit_cart(ds, "y", cp=0.001)
        split = tree.feature >= 0
        assert np.all(tree.gain[split] > 0.0)
        assert np.all(tree.gain >= 0.0)

    def test_zero_gain_split_needs_cp_zero(self):
        # XOR: no single split reduces impurity, so cp > 0 stops at the root
        ds = xor_dataset()
        stump = fit_cart(ds, "y", cp=0.01)
        assert stump.n_nodes == 1
        full = fit_cart(ds, "y", cp=0.0)
        preds = predict_tree(full, ds)
        assert np.mean((preds >= 0.5).astype(int) == ds.label("y")) == 1.0

    def test_row_order_invariance(self):
        ds = blob_dataset(4, n=300)
        rng = generator(99)
        perm = rng.permutation(ds.rows)
        shuffled = ds.subset_rows(perm)
        a = fit_cart(ds, "y", cp=0.002)
        b = fit_cart(shuffled, "y", cp=0.002)
        np.testing.assert_array_equal(a.feature, b.feature)
        np.testing.assert_array_equal(a.threshold, b.threshold)
        np.testing.assert_array_equal(a.n_rows, b.n_rows)
        np.testing.assert_array_equal(a.prob, b.prob)

    def test_tie_breaks_to_lowest_feature_index(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        ds = array_dataset(np.column_stack([x, x]), [0, 0, 1, 1])
        tree = fit_cart(ds, "y", min_split_obs=1)
        assert tree.feature[0] == 0

    def test_min_split_obs_respected(self):
        ds = blob_dataset(5, n=200)
        tree = fit_cart(ds, "y", cp=0.0, min_split_obs=40)
        leaves = tree.feature == -1
        assert np.all(tree.n_rows[leaves] >= 40)

    def test_pure_root_stays_leaf(self):
        ds = array_dataset([1.0, 2.0, 3.0], [1, 1, 1])
        tree = fit_cart(ds, "y", cp=0.0, min_split_obs=1)
        assert tree.n_nodes == 1

    def test_render_smoke(self):
        ds = array_dataset([1.0, 2.0, 3.0, 4.0], [0, 0, 1, 1])
        text = render_tree(fit_cart(ds, "y", min_split_obs=1))
        assert "x0 <= 2.5" in text
        assert text.count("leaf") == 2


class TestForest:
    def test_deterministic_in_seed(self):
        ds = blob_dataset(6, n=400)
        hyper = ForestHyper(n_trees=10, seed=5, min_node=20)
        a = predict_forest(fit_forest(ds, "y", hyper), ds)
        b = predict_forest(fit_forest(ds, "y", hyper), ds)
        np.testing.assert_array_equal(a, b)
        c = predict_forest(fit_forest(ds, "y", ForestHyper(n_trees=10, seed=6, min_node=20)), ds)
        assert not np.array_equal(a, c)

    def test_bootstrap_disable_matches_cart(self):
        # one full-sample tree with every feature is plain greedy growth
        ds = blob_dataset(7, n=300)
        hyper = ForestHyper(n_trees=1, mtry=3, min_node=2, seed=0, bootstrap=False)
        forest = fit_forest(ds, "y", hyper)
        cart = fit_cart(ds, "y", cp=0.0, min_split_obs=1)
        ftree = forest.trees[0]
        np.testing.assert_array_equal(ftree.feature, cart.feature)
        np.testing.assert_array_equal(ftree.threshold, cart.threshold)

    def test_score_is_vote_fraction(self):
        ds = blob_dataset(8, n=300)
        forest = fit_forest(ds, "y", ForestHyper(n_trees=4, seed=1, min_node=30))
        score = predict_forest(forest, ds)
        steps = np.unique(score)
        assert np.all(np.isin(steps, [0.0, 0.25, 0.5, 0.75, 1.0]))

    def test_min_node_limits_leaf_parents(self):
        ds = blob_dataset(9, n=500)
        forest = fit_forest(ds, "y", ForestHyper(n_trees=3, min_node=100, seed=2))
        for tree in forest.trees:
            split = tree.feature >= 0
            assert np.all(tree.n_rows[split] >= 100)

    def test_extratrees_rule(self):
        ds = blob_dataset(10, n=600)
        hyper = ForestHyper(n_trees=20, split_rule="extratrees", min_node=40, seed=3)
        forest = fit_forest(ds, "y", hyper)
        score = predict_forest(forest, ds)
        assert auc(ds.label("y"), score) > 0.7
        # cutpoints need not be data midpoints but stay inside the range
        for tree in forest.trees:
            for node in range(tree.n_nodes):
                if tree.feature[node] >= 0:
                    col = ds.values[:, int(tree.feature[node])]
                    assert col.min() <= tree.threshold[node] <= col.max()

    def test_mtry_validation(self):
        ds = blob_dataset(11, n=100)
        with pytest.raises(DatasetError, match="mtry"):
            fit_forest(ds, "y", ForestHyper(n_trees=1, mtry=9))

    def test_forest_beats_single_tree_on_noisy_data(self):
        train = blob_dataset(12, n=800, informative=1.0)
        test = blob_dataset(13, n=800, informative=1.0)
        tree = fit_cart(train, "y", cp=0.0, min_split_obs=5)
        forest = fit_forest(train, "y", ForestHyper(n_trees=60, min_node=25, seed=4))
        auc_tree = auc(test.label("y"), predict_tree(tree, test))
        auc_forest = auc(test.label("y"), predict_forest(forest, test))
        assert auc_forest > auc_tree


class TestImportance:
    def test_tree_importance_concentrates(self):
        ds = blob_dataset(14, n=700, informative=2.0)
        weights = variable_importance(fit_cart(ds, "y", cp=0.002))
        assert abs(sum(weights.values()) - 1.0) < 1e-12
        assert weights["x0"] == max(weights.values())
        assert weights["x0"] > 0.5

    def test_forest_importance_sums_to_one(self):
        ds = blob_dataset(15, n=400)
        forest = fit_forest(ds, "y", ForestHyper(n_trees=10, min_node=30, seed=1))
        weights = variable_importance(forest)
        assert abs(sum(weights.values()) - 1.0) < 1e-12
        assert weights["x0"] == max(weights.values())

    def test_stump_falls_back_to_uniform(self):
        ds = array_dataset([1.0, 1.0, 1.0, 1.0], [0, 1, 0, 1])
        stump = fit_cart(ds, "y")
        assert stump.n_nodes == 1
        weights = variable_importance(stump)
        np.testing.assert_allclose(list(weights.values()), 1.0)

    def test_linear_importance_uses_standardized_scale(self):
        from rarepred.linear import fit_logit

        rng = generator(16)
        # x1 carries the signal but on a tiny raw scale; standardized
        # importance must still rank it first
        x0 = rng.normal(size=2000)
        x1 = rng.normal(size=2000) * 0.01
        eta = 200.0 * x1  # equivalent to 2.0 on the standardized scale
        y = (rng.random(2000) < 1.0 / (1.0 + np.exp(-eta))).astype(np.int64)
        ds = array_dataset(np.column_stack([x0, x1]), y)
        weights = variable_importance(fit_logit(ds, "y"))
        assert weights["x1"] > 0.8

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_importance_distribution_property(self, seed):
        ds = blob_dataset(seed % 1000, n=150)
        tree = fit_cart(ds, "y", cp=0.01)
        weights = variable_importance(tree)
        assert abs(sum(weights.values()) - 1.0) < 1e-9
        assert all(w >= 0 for w in weights.values())

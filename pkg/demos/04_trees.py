"""Recursive partitioning where hyperplanes fail, and the ensemble payoff.

XOR is the classic case: no linear boundary beats coin flipping, while two
splits solve it exactly. On the interaction benchmark the same effect shows
up statistically, and averaging many decorrelated trees (bootstrap rows,
random feature subsets per split) buys a further chunk of AUC over one tree.
"""

import numpy as np

from rarepred.benchmarks import benchmark_spec
from rarepred.dataset import Dataset, Feature, stratified_split, synth_generate
from rarepred.evaluate import auc
from rarepred.linear import fit_logit, predict_proba
from rarepred.trees import (
    ForestHyper,
    fit_cart,
    fit_forest,
    predict_forest,
    predict_tree,
    render_tree,
    variable_importance,
)

SEED = 11


def xor_dataset():
    cells = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    X = np.tile(cells, (25, 1))
    y = (X[:, 0].astype(int) ^ X[:, 1].astype(int)).astype(np.int64)
    return Dataset(
        features=(Feature("a", "binary"), Feature("b", "binary")),
        values=X,
        labels={"y": y},
    )


def main():
    ds = xor_dataset()
    tree = fit_cart(ds, "y", cp=0.0, min_split_obs=1)
    tree_acc = ((predict_tree(tree, ds) >= 0.5).astype(int) == ds.label("y")).mean()
    logit_acc = (
        (predict_proba(fit_logit(ds, "y"), ds) >= 0.5).astype(int) == ds.label("y")
    ).mean()
    print(f"xor: tree accuracy {tree_acc:.2f}, logit accuracy {logit_acc:.2f}")
    print(render_tree(tree))

    data = synth_generate(benchmark_spec("interaction", seed=SEED, n=20_000))
    pair = stratified_split(data, 0.8, "outcome", seed=SEED)
    y = pair.test.label("outcome")

    logit_auc = auc(y, predict_proba(fit_logit(pair.train, "outcome"), pair.test))
    cart = fit_cart(pair.train, "outcome")
    cart_auc = auc(y, predict_tree(cart, pair.test))
    forest = fit_forest(
        pair.train, "outcome",
        ForestHyper(n_trees=50, mtry=3, min_node=100, seed=SEED),
    )
    forest_auc = auc(y, predict_forest(forest, pair.test))
    print(f"interaction benchmark holdout auc: logit {logit_auc:.3f}, "
          f"single tree {cart_auc:.3f}, forest {forest_auc:.3f}")

    print("\nforest importance (top 5):")
    ranked = sorted(variable_importance(forest).items(), key=lambda kv: -kv[1])
    for name, weight in ranked[:5]:
        print(f"  {name:<14} {weight:.3f}")


if __name__ == "__main__":
    main()

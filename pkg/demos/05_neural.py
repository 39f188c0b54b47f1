"""Feed-forward classifier internals: sizing, gradients, training.

Shows the parameter-count arithmetic for a stack of dense layers, verifies
one backprop gradient against central finite differences (the oracle every
hand-rolled network should face), and trains a small classifier with
dropout on the interaction benchmark.
"""

import numpy as np

from rarepred.benchmarks import benchmark_spec
from rarepred.dataset import stratified_split, synth_generate
from rarepred.evaluate import auc
from rarepred.neural import (
    backprop,
    glorot_init,
    param_count,
    predict_ffn,
    train_ffn,
)
from rarepred.preprocess import apply_scaler, fit_scaler
from rarepred.rng import generator

SEED = 11


def main():
    widths = [11, 9, 4, 4, 11]
    net = glorot_init(widths, ("tanh", "relu", "tanh", "relu"), None, generator(SEED))
    sizes = [(a + 1) * b for a, b in zip(widths, widths[1:])]
    print(f"dense stack {widths}: {param_count(net)} parameters "
          f"({' + '.join(map(str, sizes))}; each layer holds (n_in + 1) * n_out)")

    # one finite-difference spot check on a small net
    rng = generator(SEED)
    small = glorot_init([4, 3, 2], ("tanh", "sigmoid"), None, rng)
    X = rng.normal(size=(5, 4))
    t = rng.integers(0, 2, size=(5, 2)).astype(float)
    grads, _ = backprop(small, X, t, "bce")
    w = small.layers[0].weights
    h = 1e-5
    keep = w[0, 0]
    w[0, 0] = keep + h
    _, up = backprop(small, X, t, "bce")
    w[0, 0] = keep - h
    _, down = backprop(small, X, t, "bce")
    w[0, 0] = keep
    fd = (up - down) / (2 * h)
    print(f"gradient spot check: backprop {grads[0][0][0, 0]:+.8f}, "
          f"finite difference {fd:+.8f}")

    data = synth_generate(benchmark_spec("interaction", seed=SEED, n=20_000))
    pair = stratified_split(data, 0.8, "outcome", seed=SEED)
    params = fit_scaler(pair.train, "standardize")
    train_s = apply_scaler(pair.train, params)
    test_s = apply_scaler(pair.test, params)
    model = train_ffn(
        train_s, "outcome",
        hidden=(22, 20, 15), dropout=(0.3, 0.2, 0.0),
        epochs=15, batch_size=512, seed=SEED,
    )
    scores = predict_ffn(model, test_s)
    print(f"ffn on the interaction benchmark: holdout auc "
          f"{auc(test_s.label('outcome'), scores):.3f}")


if __name__ == "__main__":
    main()

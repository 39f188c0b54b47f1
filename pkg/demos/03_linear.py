"""Logistic regression and the elastic net on rare outcomes.

Two stories here. First, with 0.6% positives a well-fit logit still
predicts "negative" for every row at the usual 0.5 cutoff: accuracy looks
superb and sensitivity is zero. Second, the penalty mix knob: alpha=0 is
the pure absolute-value penalty (coefficients hit exact zeros), alpha=1 is
the pure quadratic one (coefficients shrink but never vanish). Note that
convention, it is the reverse of scikit-learn's l1_ratio.
"""

import numpy as np

from rarepred.benchmarks import benchmark_spec
from rarepred.dataset import stratified_split, synth_generate
from rarepred.evaluate import auc, confusion, metrics
from rarepred.linear import fit_elastic_net, fit_logit, predict_proba

SEED = 11


def main():
    ds = synth_generate(benchmark_spec("rare_linear", seed=SEED))
    pair = stratified_split(ds, 0.8, "outcome", seed=SEED)
    y = pair.test.label("outcome")

    model = fit_logit(pair.train, "outcome")
    scores = predict_proba(model, pair.test)
    m = metrics(confusion(y, (scores >= 0.5).astype(int)))
    print(f"logit on 0.6% positives (converged={model.converged}):")
    print(f"  accuracy {m.accuracy:.4f}  sensitivity {m.sensitivity:.4f}  "
          f"auc {auc(y, scores):.4f}")
    print("  high accuracy, zero sensitivity: the model ranks fine (see the auc)"
          " but the 0.5 cutoff never fires")

    print("\npenalty mix on the same data (lam=0.001):")
    print(f"  {'alpha':>5}  {'nonzero':>7}  {'|coef|_2':>9}")
    for alpha in (0.0, 0.5, 1.0):
        em = fit_elastic_net(pair.train, "outcome", lam=0.001, alpha=alpha)
        nz = int(np.count_nonzero(em.coef))
        print(f"  {alpha:5.1f}  {nz:7d}  {float(np.linalg.norm(em.coef)):9.4f}")
    print("  alpha=0 zeroes weak features outright; alpha=1 keeps them all, smaller")

    em0 = fit_elastic_net(pair.train, "outcome", lam=0.0, alpha=0.5)
    gap = max(abs(em0.intercept - model.intercept),
              float(np.max(np.abs(em0.coef - model.coef))))
    print(f"\nlam=0 recovers the unpenalized fit: max coefficient gap {gap:.2e}")


if __name__ == "__main__":
    main()

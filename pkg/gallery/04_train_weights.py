"""Recover the hidden weight table from simulated benchmarks.

The simulated hardware is the estimator under reference weights.  We measure
isolated and parallel benchmarks in random configurations, add 10% noise, and
train a fresh table from uniform weights.
"""
import numpy as np

from snakeopt.benchlab import Instance
from snakeopt.estimator import (
    GROUPS, REFERENCE_WEIGHTS, WeightTable, accuracy_report, synthesize_training_set, train_weights,
)

inst = Instance.simulate(distance=3, seed=0)
truth = inst.estimator(WeightTable.reference())
samples = synthesize_training_set(truth, inst.bounds, n_configs=8, seed=0, noise=0.1)
res = train_weights(inst.estimator(WeightTable.uniform()), samples, seed=0)

for g in GROUPS:
    print(f"{g:>24}: trained {res.weights.weights[g]:.4g}  true {REFERENCE_WEIGHTS[g]:.4g}")

rows = np.concatenate(list(res.test_rows.values()))
rep = accuracy_report(res.predictions(rows), res.y[rows])
print(f"held-out benchmarks: median inaccuracy {rep.median_inaccuracy:.2e}, "
      f"median relative {rep.median_relative:.1%}")

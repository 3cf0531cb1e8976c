"""Optimize one simulated distance-3 processor at three scopes.

Scope 1 tunes a single frequency at a time, scope 2 tunes an idle together
with its couplers, and the global scope hands every variable to one
differential-evolution run with the same evaluation allowance as scope 2.
"""
import warnings

import numpy as np

from snakeopt.benchlab import Instance, run_scope_sweep
from snakeopt.estimator import WeightTable, predict_benchmarks
from snakeopt.snake import SCOPE_MAX

warnings.simplefilter("ignore")  # reference weights are untrained on purpose

inst = Instance.simulate(distance=3, seed=0)
weights = WeightTable.reference()
est = inst.estimator(weights)

base = predict_benchmarks(est, inst.baseline(0))
print(f"{inst.n_qubits} qubits, {inst.graph.n_vars} frequency variables, {est.n_components} error components")
print(f"random baseline: median cycle error {1e3 * float(np.median(base.e_c)):.2f}e-3")

for run in run_scope_sweep(inst, weights, scopes=(1, 2, SCOPE_MAX)):
    c = run.cycle
    print(f"{run.label:>5}: E={run.value:.4f}  cycle p50 {c.p50 * 1e3:.2f}e-3  "
          f"[p2.5 {c.p2_5 * 1e3:.2f}, p97.5 {c.p97_5 * 1e3:.2f}]  {run.n_evals} evaluations")

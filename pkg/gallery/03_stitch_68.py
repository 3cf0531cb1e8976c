"""Split the 68-qubit lattice in two, optimize the halves separately, sew them back.

The seam pass re-optimizes every variable whose error terms cross the cut,
this time against the full estimator.
"""
import warnings

import numpy as np

from snakeopt.benchlab import Instance
from snakeopt.estimator import WeightTable, predict_benchmarks
from snakeopt.genmodel import GenerativeSpec
from snakeopt.snake import SnakeParams, make_stitch_plan, optimize, stitch
from snakeopt.topology import load_sycamore68

warnings.simplefilter("ignore")

inst = Instance.from_spec(GenerativeSpec(load_sycamore68(), seed=0))
est = inst.estimator(WeightTable.reference())
params = SnakeParams(scope=2, seed=0)

whole = optimize(est, inst.bounds, params)
plan = make_stitch_plan(est, 2, params)
sewn = stitch(est, inst.bounds, plan)

for label, res in (("unstitched", whole), ("stitched R=2", sewn)):
    med = np.median(predict_benchmarks(est, res.config).e_c)
    times = ", ".join(f"{t:.2f}s" for t in res.thread_times)
    print(f"{label:>13}: E={res.value:.4f}  median cycle error {med * 1e3:.2f}e-3  thread times {times}")
print(f"regions of {[len(r) for r in plan.regions]} variables, {len(plan.seams)} seam variables")

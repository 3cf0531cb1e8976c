"""Break one idle frequency on purpose, then heal it.

Healing re-optimizes the target and the couplers hinged on it while every
other frequency stays put, so the rest of the processor keeps its numbers.
"""
import numpy as np

from snakeopt.benchlab import Instance
from snakeopt.estimator import WeightTable
from snakeopt.snake import SnakeParams, heal, heal_closure, optimize

inst = Instance.simulate(distance=3, seed=4)
est = inst.estimator(WeightTable.reference())
good = optimize(est, inst.bounds, SnakeParams(scope=2)).config

# park qubit 0's idle frequency where its relaxation rate peaks
v = est.graph.idle_index[inst.graph.processor.qubits[0]]
q_row = inst.data.qubit_row(inst.graph.support[v][0])
grid = inst.bounds.grid(v)
worst = grid[int(np.argmax(np.interp(grid, inst.data.grid, inst.data.t1_inv[q_row])))]
bad = good.copy()
bad.values = good.values.copy()
bad.values[v] = worst

out = heal(bad, est, inst.bounds, [v], SnakeParams(seed=1))
closure = heal_closure(est, [v])
moved = np.flatnonzero(out.config.values != bad.values)

print(f"optimized E {est.evaluate(good):.4f}, degraded {est.evaluate(bad):.4f}, healed {out.value:.4f}")
print(f"closure: {[est.graph.names[i] for i in closure]}")
print(f"variables that moved: {[est.graph.names[i] for i in moved]}")

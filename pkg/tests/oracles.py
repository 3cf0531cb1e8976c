"""Independent reference computations shared by the test modules."""
import itertools

import numpy as np

from snakeopt.benchlab import Instance
from snakeopt.estimator import Bounds, Estimator, WeightTable
from snakeopt.genmodel import GenerativeSpec, generate
from snakeopt.topology import ProcessorGraph, build_gate_variable_graph, color_cz_layers


def toy_instance(n_qubits, seed, max_points=12, step=0.01):
    """A path of qubits with coarse random-width bounds small enough to enumerate."""
    qs = tuple(range(n_qubits))
    p = ProcessorGraph(qs, {q: (q, 0) for q in qs}, tuple((q, q + 1) for q in qs[:-1]))
    _, data = generate(GenerativeSpec(p, seed=seed))
    g = build_gate_variable_graph(p)
    est = Estimator.build(g, data, color_cz_layers(p), WeightTable.reference())
    full = Instance.from_data(p, data).bounds
    k = np.random.default_rng(seed).integers(2, max_points + 1, g.n_vars)
    hi = full.hi
    bounds = Bounds(np.round(hi - step * (k - 1), 6), hi, step)
    return est, bounds


def brute_force(est, bounds):
    grids = [bounds.grid(v) for v in range(bounds.lo.size)]
    best = min((est.evaluate(np.array(x)), x) for x in itertools.product(*grids))
    return best

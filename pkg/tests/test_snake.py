from collections import deque

import numpy as np
import pytest

from oracles import brute_force, toy_instance
from snakeopt.benchlab import Instance
from snakeopt.estimator import Bounds, BenchmarkPrediction, WeightTable, predict_benchmarks
from snakeopt.genmodel import GenerativeSpec, generate
from snakeopt.snake import (
    SCOPE_MAX, LocalProblem, SnakeError, SnakeParams, SnakeState, StitchPlan, heal, heal_closure, inner_solve,
    make_stitch_plan, neighborhood, optimize, outlier_fraction, seam_variables, select_heal_targets,
    snake_components, solve_exhaustive, stitch,
)
from snakeopt.topology import ProcessorGraph


def _state(n, todo=None):
    todo = np.ones(n, dtype=bool) if todo is None else todo
    return SnakeState(np.full(n, np.nan), np.zeros(n, dtype=bool), todo)


def incidence_oracle(g, center, limit):
    """BFS over idle/interaction incidence rebuilt from gate supports."""
    def touches(u, v):
        su, sv = set(g.support[u]), set(g.support[v])
        return len(su) != len(sv) and bool(su & sv)
    dist, queue = {center: 0}, deque([center])
    while queue:
        u = queue.popleft()
        if dist[u] == limit:
            continue
        for v in range(g.n_vars):
            if v not in dist and touches(u, v):
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


# -- params ---------------------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(scope=0), dict(scope=4), dict(traversal_rule="XX"), dict(heuristic="A*"),
                                dict(solver="gurobi"), dict(seeds=0), dict(budget=0)])
def test_params_validation(kw):
    with pytest.raises(SnakeError):
        SnakeParams(**kw)


def test_large_scope_with_arb_accepted():
    assert SnakeParams(scope=5, traversal_rule="ARB").scope == 5


# -- neighborhoods -----------------------------------------------------------------

def test_scope_one_is_center(est3):
    n = est3.graph.n_vars
    for c in range(n):
        assert neighborhood(est3, _state(n), c, 1) == [c]


def test_scope_max_is_all_unoptimized(est3):
    n = est3.graph.n_vars
    todo = np.ones(n, dtype=bool)
    todo[[0, 5, 20]] = False
    assert neighborhood(est3, _state(n, todo), 3, SCOPE_MAX) == [v for v in range(n) if todo[v]]


def test_scope_two_interior_d5():
    inst = Instance.simulate(5, seed=0)
    g = inst.graph
    n = g.n_vars
    sizes = []
    for c in range(n):
        fs = neighborhood(type("E", (), {"graph": g})(), _state(n), c, 2)
        assert set(fs) == set(incidence_oracle(g, c, 1))
        assert len(fs) <= 5
        sizes.append(len(fs))
    assert max(sizes) == 5


@pytest.mark.parametrize("scope", [2, 3])
def test_neighborhood_matches_oracle(est3, scope):
    g = est3.graph
    n = g.n_vars
    rng = np.random.default_rng(scope)
    for c in range(n):
        todo = rng.random(n) < 0.6
        todo[c] = True
        got = neighborhood(est3, _state(n, todo), c, scope)
        want = sorted(v for v in incidence_oracle(g, c, scope - 1) if todo[v])
        assert got == want


# -- snake estimator -----------------------------------------------------------------

def test_full_scope_estimator_is_full(est3, inst3, rng):
    n = est3.graph.n_vars
    comps = snake_components(est3, range(n), np.zeros(n, dtype=bool))
    assert comps.tolist() == list(range(est3.n_components))
    prob = LocalProblem.build(est3, range(n), np.full(n, np.nan), np.zeros(n, dtype=bool), inst3.bounds)
    idx = np.array([rng.integers(k) for k in prob.n_points])
    x = prob.values(idx)
    assert prob(idx[None, :])[0] == pytest.approx(est3.evaluate(x), rel=1e-12)


def test_snake_components_filter(est3, rng):
    t = est3.table
    n = est3.graph.n_vars
    for _ in range(200):
        fs = set(rng.choice(n, rng.integers(1, 8), replace=False).tolist())
        known = rng.random(n) < 0.5
        known[list(fs)] = False
        ok = fs | set(np.flatnonzero(known).tolist())
        want = [c for c in range(len(t)) if set(t.deps(c)) <= ok and set(t.deps(c)) & fs]
        assert snake_components(est3, fs, known).tolist() == want


def test_component_outside_scope_excluded(est3):
    n = est3.graph.n_vars
    g = est3.graph
    v = g.interaction_index[next(iter(g.interaction_index))]
    comps = snake_components(est3, [v], np.zeros(n, dtype=bool))
    # the interaction's CZ terms also need its idles, which are neither in F_S nor known
    assert comps.size == 0 or all(set(est3.table.deps(c)) == {v} for c in comps)


# -- inner solvers -------------------------------------------------------------------------

def _scan_oracle(est, v, x, bounds):
    vals = []
    for f in bounds.grid(v):
        y = x.copy()
        y[v] = f
        vals.append(est.evaluate(y))
    return int(np.argmin(vals))


def test_one_dimensional_exact_argmin(est3, inst3, rng):
    b = inst3.bounds
    n = est3.graph.n_vars
    x = b.lo + rng.random(n) * (b.hi - b.lo)
    known = np.ones(n, dtype=bool)
    for v in rng.choice(n, 8, replace=False):
        known_v = known.copy()
        known_v[v] = False
        prob = LocalProblem.build(est3, [v], x, known_v, b)
        idx, _ = inner_solve(prob, SnakeParams(), rng)
        assert idx[0] == _scan_oracle(est3, v, x, b)


def test_two_dimensional_split_matches_enumeration(est3, inst3, rng):
    g = est3.graph
    n = g.n_vars
    for _ in range(40):
        v = int(rng.integers(g.n_idle))
        fs = sorted({v, int(rng.choice(g.incidence[v]))})
        x = inst3.baseline(int(rng.integers(1000))).values.copy()
        known = rng.random(n) < 0.6
        known[fs] = False
        x[~known] = np.nan
        prob = LocalProblem.build(est3, fs, x, known, inst3.bounds)
        idx, val = solve_exhaustive(prob)
        full = np.stack(np.unravel_index(np.arange(int(np.prod(prob.n_points))), tuple(prob.n_points)), axis=1)
        vals = prob(full)
        j = int(np.argmin(vals))
        assert idx.tolist() == full[j].tolist()
        assert val == pytest.approx(vals[j], rel=1e-12)


def test_constant_objective_picks_lowest(inst3):
    est = inst3.estimator(WeightTable.uniform(0.0))
    n = est.graph.n_vars
    prob = LocalProblem.build(est, [0, 1], np.full(n, np.nan), np.zeros(n, dtype=bool), inst3.bounds)
    idx, val = solve_exhaustive(prob)
    assert idx.tolist() == [0, 0] and val == 0.0


def test_stochastic_within_five_percent_of_grid():
    est, _ = toy_instance(3, seed=4)
    n = est.graph.n_vars
    assert n == 5
    full = Instance.from_data(est.graph.processor, est.data).bounds
    coarse = Bounds(np.round(full.hi - 9 * 0.02, 6), full.hi, 0.02)  # 10 points per axis
    prob = LocalProblem.build(est, range(n), np.full(n, np.nan), np.zeros(n, dtype=bool), coarse)
    _, exact = solve_exhaustive(prob)
    prob2 = LocalProblem.build(est, range(n), np.full(n, np.nan), np.zeros(n, dtype=bool), coarse)
    _, approx = inner_solve(prob2, SnakeParams(solver="stochastic", budget=10_000), np.random.default_rng(0))
    assert approx <= exact * 1.05
    assert prob2.evals <= 10_000


# -- optimize -------------------------------------------------------------------------------

def test_single_variable_graph():
    p = ProcessorGraph((0,), {0: (0, 0)}, ())
    inst = Instance.from_data(p, generate(GenerativeSpec(p, seed=1))[1])
    est = inst.estimator(WeightTable.reference())
    res = optimize(est, inst.bounds, SnakeParams(scope=3))
    prob = LocalProblem.build(est, [0], np.full(1, np.nan), np.zeros(1, dtype=bool), inst.bounds)
    idx, val = inner_solve(prob, SnakeParams(), np.random.default_rng(0))
    assert res.config.values[0] == prob.values(idx)[0]
    assert len(res.trace) == 1


@pytest.mark.parametrize("seed", range(4))
def test_global_scope_matches_enumeration(seed):
    est, bounds = toy_instance(2 + seed % 2, seed)
    res = optimize(est, bounds, SnakeParams(scope=SCOPE_MAX, solver="exhaustive"))
    best, _ = brute_force(est, bounds)
    assert res.value == best


def test_scope_one_conditional_optimum(est3, inst3):
    res = optimize(est3, inst3.bounds, SnakeParams(scope=1))
    n = est3.graph.n_vars
    assert len(res.trace) == n
    assert sorted(v for s in res.trace for v in s.variables) == list(range(n))
    x = np.full(n, np.nan)
    known = np.zeros(n, dtype=bool)
    for step in res.trace:
        (v,) = step.variables
        prob = LocalProblem.build(est3, [v], x, known, inst3.bounds)
        vals = prob(np.arange(prob.n_points[0])[:, None])
        assert res.config.values[v] == inst3.bounds.grid(v)[int(np.argmin(vals))]
        x[v] = res.config.values[v]
        known[v] = True


@pytest.mark.parametrize("scope", [1, 2, 3, SCOPE_MAX])
def test_every_variable_assigned_once(est3, inst3, scope):
    res = optimize(est3, inst3.bounds, SnakeParams(scope=scope, budget=400))
    seen = [v for s in res.trace for v in s.variables]
    assert sorted(seen) == list(range(est3.graph.n_vars))
    assert not np.isnan(res.config.values).any()


@pytest.mark.parametrize("kw", [dict(scope=2), dict(scope=3, heuristic="DFS", traversal_rule="NNN"),
                                dict(scope=2, heuristic="RND", seeds=3), dict(scope=5, traversal_rule="ARB")])
def test_determinism(est3, inst3, kw):
    a = optimize(est3, inst3.bounds, SnakeParams(budget=300, **kw))
    b = optimize(est3, inst3.bounds, SnakeParams(budget=300, **kw))
    assert np.array_equal(a.config.values, b.config.values)
    assert a.trace == b.trace and a.value == b.value


def test_parallel_seeds_match_serial(est3, inst3):
    a = optimize(est3, inst3.bounds, SnakeParams(seeds=3, jobs=1))
    b = optimize(est3, inst3.bounds, SnakeParams(seeds=3, jobs=2))
    assert np.array_equal(a.config.values, b.config.values)


def test_best_thread_kept(est3, inst3):
    res = optimize(est3, inst3.bounds, SnakeParams(seeds=4))
    scores = [v for _, v in res.candidates]
    assert len(scores) == 4 and scores == sorted(scores)
    assert res.seed_var == res.candidates[0][0]
    assert res.value == pytest.approx(scores[0], rel=1e-12)


def test_optimized_68_in_trust_band(est68, inst68):
    res = optimize(est68, inst68.bounds, SnakeParams(scope=2))
    med = np.median(predict_benchmarks(est68, res.config).e_c)
    assert 3e-3 <= med <= 4e-2


# -- healing ----------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def opt3(est3, inst3):
    return optimize(est3, inst3.bounds, SnakeParams(scope=2))


def test_heal_needs_targets(est3, inst3, opt3):
    with pytest.raises(SnakeError):
        heal(opt3.config, est3, inst3.bounds, [], SnakeParams())
    with pytest.raises(SnakeError):
        heal(opt3.config, est3, inst3.bounds, ["q999"], SnakeParams())


def test_heal_interaction_leaves_idles(est3, inst3, opt3):
    g = est3.graph
    v = g.interaction_index[(0, 4)] if (0, 4) in g.interaction_index else g.n_idle
    out = heal(opt3.config, est3, inst3.bounds, [g.names[v]], SnakeParams())
    mask = np.ones(g.n_vars, dtype=bool)
    mask[v] = False
    assert np.array_equal(out.config.values[mask], opt3.config.values[mask])


def _hotspot(inst, v):
    """Grid value of idle ``v`` with the worst relaxation rate."""
    d = inst.data
    q = inst.graph.support[v][0]
    r = d.qubit_row(q)
    grid = inst.bounds.grid(v)
    rate = np.interp(grid, d.grid, d.t1_inv[r])
    return grid[int(np.argmax(rate))]


def test_heal_degraded_variable(est3, inst3, opt3):
    g = est3.graph
    v = 4
    x = opt3.config.values.copy()
    x[v] = _hotspot(inst3, v)
    bad = opt3.config.copy()
    bad.values = x
    out = heal(bad, est3, inst3.bounds, [v], SnakeParams())
    assert out.value < est3.evaluate(bad)
    closure = heal_closure(est3, [v])
    outside = np.setdiff1d(np.arange(g.n_vars), closure)
    assert np.array_equal(out.config.values[outside], x[outside])
    touched = set(est3.table.gate[est3.components_touching(closure)].tolist())
    eg0, eg1 = est3.per_gate(bad), est3.per_gate(out.config)
    for gate in set(range(g.n_vars)) - touched:
        assert eg0[gate] == eg1[gate]


def test_heal_never_worsens(est3, inst3, opt3):
    for v in range(0, est3.graph.n_vars, 7):
        out = heal(opt3.config, est3, inst3.bounds, [v], SnakeParams(budget=200))
        assert out.value <= opt3.value + 1e-15


def test_heal_closure_hinges_idles(est3):
    g = est3.graph
    assert heal_closure(est3, [0]) == sorted([0, *g.incidence[0]])
    v = g.n_idle
    assert heal_closure(est3, [v]) == [v]


def _prediction(pairs, e_c, qubits, e_sq):
    return BenchmarkPrediction(tuple(qubits), tuple(pairs), np.asarray(e_sq), np.zeros(len(pairs)), np.asarray(e_c))


def test_select_targets(est3):
    g = est3.graph
    pairs = list(g.interaction_index)
    qubits = list(g.processor.qubits)
    quiet = _prediction(pairs, np.full(len(pairs), 5e-3), qubits, np.full(len(qubits), 5e-4))
    assert select_heal_targets(est3, quiet) == []
    e_c = np.full(len(pairs), 5e-3)
    e_c[0] = 2.0e-2
    one = _prediction(pairs, e_c, qubits, np.full(len(qubits), 5e-4))
    assert select_heal_targets(est3, one) == [g.interaction_index[pairs[0]]]
    # a qubit sitting in two outlier pairs
    q = pairs[0][0]
    second = next(i for i, p in enumerate(pairs) if i > 0 and q in p)
    e_c[second] = 1.6e-2
    two = _prediction(pairs, e_c, qubits, np.full(len(qubits), 5e-4))
    got = select_heal_targets(est3, two)
    assert g.idle_index[q] in got
    assert {g.interaction_index[pairs[0]], g.interaction_index[pairs[second]]} <= set(got)


def test_outlier_fraction():
    p = _prediction([(0, 1), (1, 2)], [1e-2, 2e-2], [0, 1, 2], [0, 0, 0])
    assert outlier_fraction(p) == 0.5


# -- stitching ----------------------------------------------------------------------------------

def test_stitch_single_region_is_optimize(est3, inst3):
    params = SnakeParams(scope=2, seed=5)
    plan = StitchPlan([list(range(est3.graph.n_vars))], params)
    a = stitch(est3, inst3.bounds, plan)
    b = optimize(est3, inst3.bounds, params)
    assert np.array_equal(a.config.values, b.config.values)


def test_seams_match_cut_scan(est68):
    plan = make_stitch_plan(est68, 2, SnakeParams())
    side = {v: i for i, r in enumerate(plan.regions) for v in r}
    t = est68.table
    want = set()
    for c in range(len(t)):
        deps = t.deps(c)
        if len(deps) == 2 and side[deps[0]] != side[deps[1]]:
            want.update(deps)
    assert set(plan.seams) == want
    assert seam_variables(est68, plan.regions) == sorted(want)


def test_plan_validation(est3):
    n = est3.graph.n_vars
    with pytest.raises(SnakeError):
        StitchPlan([list(range(n)), [0]], SnakeParams()).validate(n)
    with pytest.raises(SnakeError):
        StitchPlan([list(range(n - 1))], SnakeParams()).validate(n)


def test_stitch_covers_everything(est3, inst3):
    plan = make_stitch_plan(est3, 2, SnakeParams())
    res = stitch(est3, inst3.bounds, plan)
    assert not np.isnan(res.config.values).any()
    assert len(res.thread_times) == 2

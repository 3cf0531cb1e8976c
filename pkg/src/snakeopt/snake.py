"""The Snake optimizer.

A thread starts from a seed variable, optimizes every unoptimized variable
within a scope-bounded neighborhood against the restricted estimator E_S,
fixes the result, traverses to a new center, and repeats until all
variables are set.  Healing re-runs a thread over a few target variables
with everything else held fixed; stitching runs threads over disjoint
regions and heals the seams.
"""
from __future__ import annotations

import time
import warnings
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import differential_evolution

from . import _kernels as K
from .estimator import Bounds, Estimator, EstimatorError, FrequencyConfiguration, predict_benchmarks
from .topology import split_regions

SCOPE_MAX = "max"
RULES = ("NN", "NNN", "ARB")
HEURISTICS = ("BFS", "DFS", "RND")
SOLVERS = ("auto", "exhaustive", "stochastic")
OUTLIER_CYCLE = 1.5e-2
OUTLIER_SQ = 1.5e-3
EXHAUSTIVE_CHUNK = 1 << 18


class SnakeError(RuntimeError):
    pass


@dataclass(frozen=True)
class SnakeParams:
    scope: int | str = 2
    seeds: int | str = 1  # "all" or the number of randomly chosen seed variables
    traversal_rule: str = "NN"
    heuristic: str = "BFS"
    solver: str = "auto"
    budget: int = 2000  # evaluations per stochastic inner solve
    global_budget: int | None = None  # evaluation budget when scope is SCOPE_MAX
    exhaustive_max_dims: int = 2  # auto solver searches problems up to this size exhaustively
    popsize: int = 10
    polish: bool = True  # finish stochastic solves with per-axis line scans
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.scope != SCOPE_MAX and not (isinstance(self.scope, (int, np.integer)) and self.scope >= 1):
            raise SnakeError(f"scope must be an integer >= 1 or {SCOPE_MAX!r}, got {self.scope!r}")
        if self.traversal_rule not in RULES:
            raise SnakeError(f"unknown traversal rule {self.traversal_rule!r}")
        if self.heuristic not in HEURISTICS:
            raise SnakeError(f"unknown traversal heuristic {self.heuristic!r}")
        if self.solver not in SOLVERS:
            raise SnakeError(f"unknown inner solver {self.solver!r}")
        if self.scope != SCOPE_MAX and self.scope > 3 and self.traversal_rule != "ARB":
            raise SnakeError("scopes above 3 need the ARB traversal rule")
        if not (self.seeds == "all" or (isinstance(self.seeds, (int, np.integer)) and self.seeds >= 1)):
            raise SnakeError(f"seeds must be 'all' or a positive count, got {self.seeds!r}")
        if self.budget < 1 or self.popsize < 1:
            raise SnakeError("budget and popsize must be positive")

    @property
    def is_global(self) -> bool:
        return self.scope == SCOPE_MAX

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class TraceStep:
    center: int
    variables: tuple[int, ...]
    value: float
    n_evals: int
    runtime: float = field(default=0.0, compare=False)


@dataclass
class SnakeState:
    x: np.ndarray  # current values; NaN for unset variables
    known: np.ndarray  # variables usable as fixed constants in E_S
    todo: np.ndarray  # variables still to optimize in this thread
    frontier: deque = field(default_factory=deque)
    center: int | None = None

    @property
    def optimized(self) -> dict[int, float]:
        return {int(v): float(self.x[v]) for v in np.flatnonzero(self.known)}


@dataclass
class SnakeResult:
    config: FrequencyConfiguration
    value: float
    trace: list[TraceStep]
    seed_var: int
    thread_times: list[float] = field(default_factory=list, compare=False)
    candidates: list[tuple[int, float]] = field(default_factory=list)


# -- neighborhoods and restricted estimators -----------------------------------

def neighborhood(est: Estimator, state: SnakeState, center: int, scope) -> list[int]:
    """Unoptimized variables within incidence distance < scope of ``center``.

    Distances are counted on the idle/interaction incidence graph, where an idle
    variable touches its qubit's interactions and an interaction touches its two
    idles.  Scope 1 is the center alone and scope 2 around an idle adds its
    couplers (5 variables on a lattice interior).
    """
    if scope == SCOPE_MAX:
        return [int(v) for v in np.flatnonzero(state.todo)]
    dist = est.graph.incidence_distances(center, scope - 1)
    return sorted(v for v in dist if state.todo[v])


def snake_components(est: Estimator, fs, known: np.ndarray) -> np.ndarray:
    """Components whose dependencies lie in F_S plus known variables and touch F_S."""
    fs = np.asarray(sorted(fs), dtype=np.int64)
    if fs.size == 0:
        return np.zeros(0, dtype=np.int64)
    cand = est.components_touching(fs)
    allowed = known.copy()
    allowed[fs] = True
    va = est.table.va[cand]
    vb = est.table.vb[cand]
    ok = allowed[va] & ((vb < 0) | allowed[np.maximum(vb, 0)])
    return cand[ok]


@dataclass
class LocalProblem:
    """E_S as a function of grid indices of the free variables."""

    est: Estimator
    comps: np.ndarray
    free: np.ndarray
    xbase: np.ndarray
    grids: np.ndarray
    n_points: np.ndarray
    evals: int = 0

    @classmethod
    def build(cls, est: Estimator, fs, x: np.ndarray, known: np.ndarray, bounds: Bounds) -> "LocalProblem":
        fs = np.asarray(sorted(fs), dtype=np.int64)
        comps = snake_components(est, fs, known)
        xbase = np.where(np.isnan(x), 0.0, x)
        return cls(est, comps, fs, np.ascontiguousarray(xbase), bounds.grid_matrix(fs), bounds.n_points[fs])

    def __call__(self, idx: np.ndarray) -> np.ndarray:
        idx = np.ascontiguousarray(np.atleast_2d(idx), dtype=np.int64)
        self.evals += idx.shape[0]
        if self.comps.size == 0:
            return np.zeros(idx.shape[0])
        return K.batch_subset_total(self.comps, self.est.component_weights, self.xbase, self.free, self.grids,
                                    idx, self.est.kernel_table)

    def axis_table(self, axes: tuple[int, ...]) -> np.ndarray:
        """The E_S terms whose free dependencies are exactly ``axes``, tabulated on their sub-grid."""
        pos = np.full(self.xbase.size + 1, -1, dtype=np.int64)
        pos[self.free] = np.arange(self.free.size)
        ta = pos[self.est.table.va[self.comps]]
        tb = pos[self.est.table.vb[self.comps]]  # vb = -1 lands on the sentinel slot
        mask = np.zeros((self.comps.size, self.free.size), dtype=bool)
        rows = np.arange(self.comps.size)
        mask[rows[ta >= 0], ta[ta >= 0]] = True
        mask[rows[tb >= 0], tb[tb >= 0]] = True
        want = np.zeros(self.free.size, dtype=bool)
        want[list(axes)] = True
        sel = self.comps[(mask == want).all(axis=1)]
        shape = tuple(int(self.n_points[j]) for j in axes)
        if sel.size == 0:
            return np.zeros(shape)
        idx = np.stack(np.unravel_index(np.arange(int(np.prod(shape))), shape), axis=1)
        return K.batch_subset_total(sel, self.est.component_weights, self.xbase,
                                    np.ascontiguousarray(self.free[list(axes)]),
                                    np.ascontiguousarray(self.grids[list(axes)]), idx,
                                    self.est.kernel_table).reshape(shape)

    def values(self, idx) -> np.ndarray:
        return self.grids[np.arange(self.free.size), np.asarray(idx, dtype=np.int64)]


# -- inner solvers ---------------------------------------------------------------

def solve_exhaustive(prob: LocalProblem) -> tuple[np.ndarray, float]:
    """Global grid minimum; ties go to the lexicographically lowest frequencies."""
    if np.any(prob.n_points < 1):
        raise SnakeError("empty bounds in inner solve")
    total = int(np.prod(prob.n_points.astype(object)))
    if prob.comps.size == 0:
        return np.zeros(prob.free.size, dtype=np.int64), 0.0
    if prob.free.size == 2:
        # exact split: single-axis terms on each axis, coupled terms on the full grid
        n1 = int(prob.n_points[1])
        grid = prob.axis_table((0, 1)) + prob.axis_table((0,))[:, None] + prob.axis_table((1,))[None, :]
        prob.evals += total
        i = int(np.argmin(grid))
        return np.array(divmod(i, n1), dtype=np.int64), float(grid.flat[i])
    best_val, best_idx = np.inf, None
    for lo in range(0, total, EXHAUSTIVE_CHUNK):
        flat = np.arange(lo, min(lo + EXHAUSTIVE_CHUNK, total))
        idx = np.stack(np.unravel_index(flat, tuple(prob.n_points)), axis=1)
        vals = prob(idx)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_idx = float(vals[i]), idx[i]
    return best_idx, best_val


def solve_stochastic(prob: LocalProblem, budget: int, popsize: int, rng: np.random.Generator,
                     x0: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """Differential evolution over grid indices with a fixed evaluation budget."""
    k = prob.free.size
    if np.any(prob.n_points < 1):
        raise SnakeError("empty bounds in inner solve")
    if prob.comps.size == 0:
        return np.zeros(k, dtype=np.int64), 0.0
    top = (prob.n_points - 1).astype(float)
    if np.all(top == 0):
        return np.zeros(k, dtype=np.int64), float(prob(np.zeros((1, k)))[0])
    pop = max(5, popsize * k)
    maxiter = max(budget // pop - 1, 1)
    # differential_evolution needs a non-degenerate box; pinned variables get a dummy width
    hi = np.where(top > 0, top, 1.0)
    pinned = top == 0

    def f(z):
        idx = np.rint(np.asarray(z).T).astype(np.int64)
        idx[:, pinned] = 0
        np.clip(idx, 0, top.astype(np.int64), out=idx)
        return prob(idx)

    init = "latinhypercube"
    if x0 is not None:
        init_rng = np.random.default_rng(rng.integers(1 << 63))
        init = init_rng.random((pop, k)) * hi
        init[0] = x0
    seed = int(rng.integers(1 << 31))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = differential_evolution(
            f, list(zip(np.zeros(k), hi)), integrality=np.ones(k, dtype=bool), vectorized=True,
            updating="deferred", popsize=max(1, pop // k), maxiter=maxiter, tol=0.0, atol=0.0,
            polish=False, init=init, seed=seed,
        )
    idx = np.clip(np.rint(res.x).astype(np.int64), 0, top.astype(np.int64))
    idx[pinned] = 0
    val = float(prob(idx[None, :])[0])
    return idx, val


def coordinate_polish(prob: LocalProblem, idx: np.ndarray, val: float, budget: int) -> tuple[np.ndarray, float]:
    """Exact line scans along each axis until a full pass brings no gain or the budget runs out."""
    idx = idx.copy()
    spent = 0
    improved = True
    while improved:
        improved = False
        for j in range(idx.size):
            n = int(prob.n_points[j])
            if n < 2 or spent + n > budget:
                continue
            rows = np.repeat(idx[None, :], n, axis=0)
            rows[:, j] = np.arange(n)
            vals = prob(rows)
            spent += n
            b = int(np.argmin(vals))
            if vals[b] < val:
                val = float(vals[b])
                idx = rows[b]
                improved = True
    return idx, val


def inner_solve(prob: LocalProblem, params: SnakeParams, rng: np.random.Generator, budget: int | None = None,
                x0: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    dims = prob.free.size
    use_grid = params.solver == "exhaustive" or (params.solver == "auto" and dims <= params.exhaustive_max_dims)
    if use_grid:
        return solve_exhaustive(prob)
    budget = budget or params.budget
    if not params.polish:
        return solve_stochastic(prob, budget, params.popsize, rng, x0)
    # DE finds the basin, line scans settle into it
    idx, val = solve_stochastic(prob, budget // 2, params.popsize, rng, x0)
    return coordinate_polish(prob, idx, val, budget - budget // 2)


# -- threads -------------------------------------------------------------------

def _traversal_candidates(est: Estimator, center: int, fs: list[int], rule: str, scope) -> list[int]:
    g = est.graph
    if rule == "NN":
        out = set()
        for v in fs:
            out.update(g.adjacency[v])
        return sorted(out)
    if rule == "NNN":
        out = set()
        for v in fs:
            for u in g.adjacency[v]:
                out.add(u)
                out.update(g.adjacency[u])
        return sorted(out)
    s = 1 if scope == SCOPE_MAX else int(scope)
    dist = g.incidence_distances(center, 2 * s - 1)
    return sorted(v for v, d in dist.items() if s <= d <= 2 * s - 1)


def run_thread(est: Estimator, bounds: Bounds, params: SnakeParams, start: int, x: np.ndarray,
               known: np.ndarray, todo: np.ndarray, rng: np.random.Generator,
               warm: bool = False) -> tuple[np.ndarray, list[TraceStep]]:
    """One optimization thread.  ``known`` variables act as constants; ``todo`` get optimized."""
    state = SnakeState(x.astype(float).copy(), known.copy(), todo.copy())
    g = est.graph
    order = [v for v in g.incidence_distances(start) if state.todo[v]]
    reached = set(order)
    order += [int(v) for v in np.flatnonzero(state.todo) if v not in reached]
    fallback = iter(order)
    state.frontier.append(start)
    trace: list[TraceStep] = []
    step = 0
    while state.todo.any():
        center = None
        while state.frontier:
            if params.heuristic == "BFS":
                v = state.frontier.popleft()
            elif params.heuristic == "DFS":
                v = state.frontier.pop()
            else:
                j = int(rng.integers(len(state.frontier)))
                state.frontier.rotate(-j)
                v = state.frontier.popleft()
            if state.todo[v]:
                center = v
                break
        if center is None:
            for v in fallback:
                if state.todo[v]:
                    center = v
                    break
        state.center = center
        t0 = time.perf_counter()
        fs = neighborhood(est, state, center, params.scope)
        prob = LocalProblem.build(est, fs, state.x, state.known, bounds)
        budget = params.global_budget if params.is_global and params.global_budget else params.budget
        x0 = None
        if warm and not np.isnan(state.x[prob.free]).any():
            x0 = np.rint((state.x[prob.free] - bounds.lo[prob.free]) / bounds.step)
        try:
            idx, val = inner_solve(prob, params, rng, budget, x0)
        except Exception as exc:  # noqa: BLE001 - re-raised with the step index
            raise SnakeError(f"inner solve failed at step {step} (center {g.names[center]}): {exc}") from exc
        state.x[prob.free] = prob.values(idx)
        state.known[prob.free] = True
        state.todo[prob.free] = False
        trace.append(TraceStep(center, tuple(int(v) for v in prob.free), val, prob.evals,
                               time.perf_counter() - t0))
        cands = _traversal_candidates(est, center, fs, params.traversal_rule, params.scope)
        if params.heuristic == "DFS":
            cands = cands[::-1]
        state.frontier.extend(v for v in cands if state.todo[v])
        step += 1
    return state.x, trace


def _seed_vars(region: list[int], params: SnakeParams) -> list[int]:
    if params.seeds == "all" or params.seeds >= len(region):
        return list(region)
    rng = np.random.default_rng([params.seed, len(region)])
    return sorted(int(v) for v in rng.choice(region, size=int(params.seeds), replace=False))


def _thread_job(args):
    est, bounds, params, start, region = args
    n = est.graph.n_vars
    todo = np.zeros(n, dtype=bool)
    todo[region] = True
    t0 = time.perf_counter()
    x, trace = run_thread(est, bounds, params, start, np.full(n, np.nan), np.zeros(n, dtype=bool), todo,
                          np.random.default_rng([params.seed, start]))
    return start, x, trace, time.perf_counter() - t0


def _map(fn, jobs, width):
    if width > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=width) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def _best_of(est: Estimator, results) -> tuple:
    """Pick the thread whose completed region minimizes the estimator restricted to it."""
    scored = []
    for start, x, trace, dt in results:
        scored.append((_partial_value(est, x), start, x, trace, dt))
    scored.sort(key=lambda r: (r[0], r[1]))
    return scored[0], [(s[1], s[0]) for s in scored]


def _partial_value(est: Estimator, x: np.ndarray) -> float:
    known = ~np.isnan(x)
    t = est.table
    ok = known[t.va] & ((t.vb < 0) | known[np.maximum(t.vb, 0)])
    comps = np.flatnonzero(ok).astype(np.int64)
    if comps.size == 0:
        return 0.0
    vals = K.subset_values(comps, np.where(known, x, 0.0), est.kernel_table)
    return float(np.dot(est.component_weights[comps], vals))


def _optimize_region(est: Estimator, bounds: Bounds, params: SnakeParams, region: list[int]):
    jobs = [(est, bounds, params, s, region) for s in _seed_vars(region, params)]
    results = _map(_thread_job, jobs, params.jobs)
    best, cands = _best_of(est, results)
    return best, cands, [r[3] for r in results]


def optimize(est: Estimator, bounds: Bounds, params: SnakeParams) -> SnakeResult:
    """Run Snake threads from the configured seeds and keep the configuration with the lowest E."""
    region = list(range(est.graph.n_vars))
    if not region:
        raise SnakeError("nothing to optimize")
    (val, start, x, trace, _), cands, times = _optimize_region(est, bounds, params, region)
    cfg = FrequencyConfiguration(est.graph.names, x, bounds)
    return SnakeResult(cfg, est.evaluate(cfg), trace, start, times, cands)


# -- healing -------------------------------------------------------------------

def heal_closure(est: Estimator, targets) -> list[int]:
    g = est.graph
    out = set(targets)
    for v in targets:
        if g.is_idle(v):
            out.update(g.incidence[v])
    return sorted(out)


def _resolve(est: Estimator, targets) -> list[int]:
    g = est.graph
    out = []
    for t in targets:
        if isinstance(t, str):
            try:
                out.append(g.index_of(t))
            except KeyError:
                raise SnakeError(f"unknown variable {t!r}") from None
        else:
            if not 0 <= int(t) < g.n_vars:
                raise SnakeError(f"unknown variable index {t}")
            out.append(int(t))
    return sorted(set(out))


def heal(config: FrequencyConfiguration, est: Estimator, bounds: Bounds, targets, params: SnakeParams) -> SnakeResult:
    """Re-optimize target variables (and the interactions hinged on idle targets) with all else fixed.

    The returned configuration never has a higher E than the input: if the
    re-optimized closure does not improve E the input values are kept.
    """
    tv = _resolve(est, targets)
    if not tv:
        raise SnakeError("healing needs at least one target")
    closure = heal_closure(est, tv)
    n = est.graph.n_vars
    todo = np.zeros(n, dtype=bool)
    todo[closure] = True
    x0 = config.values.copy()
    if np.isnan(x0).any():
        raise SnakeError("healing needs a complete configuration")
    rng = np.random.default_rng([params.seed, 7919, tv[0]])
    t0 = time.perf_counter()
    x, trace = run_thread(est, bounds, params, tv[0], x0, ~todo, todo, rng, warm=True)
    dt = time.perf_counter() - t0
    before = _closure_value(est, x0, closure)
    after = _closure_value(est, x, closure)
    if not after < before:
        x = x0
    cfg = FrequencyConfiguration(config.names, x, bounds)
    return SnakeResult(cfg, est.evaluate(cfg), trace, tv[0], [dt])


def _closure_value(est: Estimator, x: np.ndarray, closure) -> float:
    comps = est.components_touching(closure)
    if comps.size == 0:
        return 0.0
    vals = K.subset_values(comps, np.ascontiguousarray(x), est.kernel_table)
    return float(np.dot(est.component_weights[comps], vals))


def select_heal_targets(est: Estimator, prediction, cycle_threshold: float = OUTLIER_CYCLE,
                        sq_threshold: float = OUTLIER_SQ) -> list[int]:
    """Interaction variables of outlier pairs; idle variables of outlier qubits or of qubits in >= 2 outlier pairs."""
    g = est.graph
    targets = set()
    hits: dict[int, int] = {}
    for (a, b), e in zip(prediction.pairs, prediction.e_c):
        if e >= cycle_threshold:
            targets.add(g.interaction_index[(a, b)])
            hits[a] = hits.get(a, 0) + 1
            hits[b] = hits.get(b, 0) + 1
    for q, e in zip(prediction.qubits, prediction.e_sq):
        if e >= sq_threshold or hits.get(q, 0) >= 2:
            targets.add(g.idle_index[q])
    return sorted(targets)


# -- stitching -----------------------------------------------------------------

@dataclass
class StitchPlan:
    regions: list[list[int]]
    params: SnakeParams
    seams: list[int] = field(default_factory=list)

    def validate(self, n_vars: int):
        seen = np.zeros(n_vars, dtype=int)
        for r in self.regions:
            np.add.at(seen, np.asarray(r, dtype=np.int64), 1)
        if np.any(seen > 1):
            raise SnakeError("stitch regions overlap")
        if np.any(seen == 0):
            raise SnakeError("stitch regions do not cover every variable")


def seam_variables(est: Estimator, regions: list[list[int]]) -> list[int]:
    """Variables that appear in a component whose dependencies span two regions."""
    label = np.full(est.graph.n_vars, -1)
    for i, r in enumerate(regions):
        label[np.asarray(r, dtype=np.int64)] = i
    t = est.table
    two = t.vb >= 0
    cross = two & (label[t.va] != label[np.maximum(t.vb, 0)])
    return sorted(set(t.va[cross].tolist()) | set(t.vb[cross].tolist()))


def make_stitch_plan(est: Estimator, n_regions: int, params: SnakeParams) -> StitchPlan:
    """Split qubits into spatial regions; interactions follow their lower-numbered qubit."""
    g = est.graph
    groups = split_regions(g.processor, n_regions)
    owner = {q: i for i, grp in enumerate(groups) for q in grp}
    regions: list[list[int]] = [[] for _ in groups]
    for v in range(g.n_vars):
        regions[owner[g.support[v][0]]].append(v)
    return StitchPlan(regions, params, seam_variables(est, regions))


def stitch(est: Estimator, bounds: Bounds, plan: StitchPlan) -> SnakeResult:
    """Optimize regions independently, merge, then heal the seam variables against the full estimator."""
    n = est.graph.n_vars
    plan.validate(n)
    params = plan.params
    if len(plan.regions) == 1:
        return optimize(est, bounds, params)
    serial = SnakeParams(**{**params.to_dict(), "jobs": 1})
    jobs = [(est, bounds, serial, r) for r in plan.regions]
    outs = _map(_region_job, jobs, params.jobs)
    x = np.full(n, np.nan)
    trace: list[TraceStep] = []
    times = []
    for (val, start, xr, tr, _), _cands, ts in outs:
        mask = ~np.isnan(xr)
        x[mask] = xr[mask]
        trace.extend(tr)
        times.append(sum(ts))
    cfg = FrequencyConfiguration(est.graph.names, x, bounds)
    seams = plan.seams or seam_variables(est, plan.regions)
    if seams:
        healed = heal_seams(cfg, est, bounds, seams, params)
        trace.extend(healed.trace)
        cfg = healed.config
    return SnakeResult(cfg, est.evaluate(cfg), trace, -1, times)


def _region_job(args):
    est, bounds, params, region = args
    return _optimize_region(est, bounds, params, region)


def heal_seams(cfg: FrequencyConfiguration, est: Estimator, bounds: Bounds, seams, params: SnakeParams) -> SnakeResult:
    """Seam reconciliation: one healing pass over the seam variables (no hinge expansion)."""
    n = est.graph.n_vars
    todo = np.zeros(n, dtype=bool)
    todo[list(seams)] = True
    rng = np.random.default_rng([params.seed, 104729])
    x0 = cfg.values.copy()
    t0 = time.perf_counter()
    x, trace = run_thread(est, bounds, params, int(min(seams)), x0, ~todo, todo, rng, warm=True)
    if not _closure_value(est, x, seams) < _closure_value(est, x0, seams):
        x = x0
    out = FrequencyConfiguration(cfg.names, x, bounds)
    return SnakeResult(out, est.evaluate(out), trace, int(min(seams)), [time.perf_counter() - t0])


def outlier_fraction(prediction, threshold: float = OUTLIER_CYCLE) -> float:
    if len(prediction.e_c) == 0:
        return 0.0
    return float(np.mean(prediction.e_c >= threshold))


def predict(est: Estimator, result: SnakeResult):
    return predict_benchmarks(est, result.config)


__all__ = [
    "SCOPE_MAX", "SnakeParams", "SnakeState", "SnakeResult", "TraceStep", "StitchPlan", "LocalProblem",
    "neighborhood", "snake_components", "inner_solve", "solve_exhaustive", "solve_stochastic", "run_thread",
    "optimize", "heal", "heal_closure", "select_heal_targets", "seam_variables", "make_stitch_plan", "stitch",
    "heal_seams", "outlier_fraction", "EstimatorError",
]

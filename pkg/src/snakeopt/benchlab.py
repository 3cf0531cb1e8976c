"""Simulated benchmark studies: baselines, scope/mitigation/scaling sweeps and model fits."""
from __future__ import annotations

import csv
import io
import itertools
import json
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from .estimator import (
    MECHANISMS, Bounds, Estimator, FrequencyConfiguration, WeightTable, hard_bounds, predict_benchmarks,
    random_configuration,
)
from .genmodel import GenerativeSpec, generate
from .snake import SCOPE_MAX, SnakeParams, optimize, outlier_fraction, OUTLIER_CYCLE
from .topology import build_gate_variable_graph, build_surface_code_lattice, color_cz_layers

TABLE_COLUMNS = ("benchmark", "N", "label", "min", "max", "mean", "p2.5", "p25", "p50", "p75", "p97.5")
_PCTS = (2.5, 25.0, 50.0, 75.0, 97.5)


class BenchlabError(RuntimeError):
    pass


# -- reports and standards -----------------------------------------------------

@dataclass(frozen=True)
class PercentileReport:
    min: float
    max: float
    mean: float
    p2_5: float
    p25: float
    p50: float
    p75: float
    p97_5: float
    n: int = 0

    def to_dict(self) -> dict:
        return {"min": self.min, "max": self.max, "mean": self.mean, "p2.5": self.p2_5, "p25": self.p25,
                "p50": self.p50, "p75": self.p75, "p97.5": self.p97_5, "n": self.n}

    @classmethod
    def from_dict(cls, d: dict, scale: float = 1.0) -> "PercentileReport":
        g = lambda k: float(d[k]) * scale  # noqa: E731
        return cls(g("min"), g("max"), g("mean"), g("p2.5"), g("p25"), g("p50"), g("p75"), g("p97.5"),
                   int(d.get("n", 0)))

    def row(self) -> list[float]:
        return [self.min, self.max, self.mean, self.p2_5, self.p25, self.p50, self.p75, self.p97_5]


def percentile_report(values) -> PercentileReport:
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise BenchlabError("percentile report of an empty sample")
    q = np.percentile(v, _PCTS)  # linear interpolation between order statistics
    # clamp float noise so the ordering invariant holds exactly
    lo, hi = float(v.min()), float(v.max())
    q = np.clip(np.maximum.accumulate(q), lo, hi)
    return PercentileReport(lo, hi, float(v.mean()), *map(float, q), n=int(v.size))


@dataclass(frozen=True)
class Standards:
    outlier_cycle: float
    baseline: PercentileReport
    crossover: PercentileReport
    baseline_n: int
    crossover_n: int


def load_standards() -> Standards:
    raw = json.loads(resources.files("snakeopt").joinpath("data/standards.json").read_text())
    scale = 1e-3 if raw.get("units") == "1e-3" else 1.0
    return Standards(raw["outlier_cycle"] * scale,
                     PercentileReport.from_dict(raw["baseline"], scale),
                     PercentileReport.from_dict(raw["crossover"], scale),
                     raw["baseline"]["N"], raw["crossover"]["N"])


def load_scaling_experiment() -> list[dict]:
    """Rows of the bundled experimental scaling table, values in absolute error units."""
    text = resources.files("snakeopt").joinpath("data/si_bench_scaling_exp.csv").read_text()
    rows = []
    for r in csv.DictReader(io.StringIO(text)):
        out = {"benchmark": r["benchmark"], "N": int(r["N"]), "label": r["label"],
               "configurations": None if r["configurations"] == "-" else int(r["configurations"])}
        for k in TABLE_COLUMNS[3:]:
            out[k] = float(r[k]) * 1e-3
        rows.append(out)
    return rows


def experimental_means(label: str = "Optimized", benchmark: str = "CZXEB") -> list[tuple[int, float]]:
    return [(r["N"], r["mean"]) for r in load_scaling_experiment()
            if r["label"] == label and r["benchmark"] == benchmark]


def random_baseline(bounds: Bounds, seed: int, names=None) -> FrequencyConfiguration:
    """Independent uniform draw per variable on its hard-bound grid."""
    if np.any(bounds.n_points < 1):
        raise BenchlabError("empty hard bounds")
    names = tuple(names) if names is not None else tuple(f"v{i}" for i in range(len(bounds.lo)))
    return random_configuration(bounds, names, np.random.default_rng(seed))


# -- fits ------------------------------------------------------------------------

def saturation_model(n, n_sat, e_scale, e_sat):
    return e_sat - e_scale * np.exp(-np.asarray(n, dtype=float) / n_sat)


@dataclass(frozen=True)
class SaturationFit:
    n_sat: float
    e_scale: float
    e_sat: float
    sigma: tuple[float, float, float]
    residuals: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"N_sat": self.n_sat, "e_scale": self.e_scale, "e_sat": self.e_sat,
                "sigma": {"N_sat": self.sigma[0], "e_scale": self.sigma[1], "e_sat": self.sigma[2]},
                "residuals": list(self.residuals)}


def fit_saturation(points) -> SaturationFit:
    """Least-squares fit of the three-parameter saturation model to (N, mean e_c) points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 4 or len(np.unique(pts[:, 0])) < 3:
        raise BenchlabError("saturation fit needs at least 4 points over 3 distinct sizes")
    n, y = pts[:, 0], pts[:, 1]
    p0 = (float(np.median(n)), float(y.max() - y.min()), float(y.max()))
    # errors grow towards saturation: N_sat > 0, e_scale >= 0, e_sat >= 0
    box = ([1e-9, 0.0, 0.0], [np.inf, np.inf, np.inf])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OptimizeWarning)
        warnings.simplefilter("ignore", RuntimeWarning)
        try:
            popt, pcov = curve_fit(saturation_model, n, y, p0=p0, bounds=box, max_nfev=20000)
        except RuntimeError as exc:
            res = y - saturation_model(n, *p0)
            raise BenchlabError(f"saturation fit did not converge ({exc}); residuals at start {res.tolist()}")
    sig = np.sqrt(np.clip(np.diag(pcov), 0, None)) if np.all(np.isfinite(pcov)) else np.full(3, np.inf)
    res = y - saturation_model(n, *popt)
    return SaturationFit(float(popt[0]), float(popt[1]), float(popt[2]), tuple(map(float, sig)),
                         tuple(map(float, res)))


@dataclass(frozen=True)
class RuntimeFit:
    a: float
    b: float
    c: float
    sigma: tuple[float, float, float]
    r2: float
    residuals: tuple[float, ...]

    def __call__(self, n):
        n = np.asarray(n, dtype=float)
        return self.a + self.b * n + self.c * n * n

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "r2": self.r2,
                "sigma": {"a": self.sigma[0], "b": self.sigma[1], "c": self.sigma[2]},
                "residuals": list(self.residuals)}


def fit_runtime(points) -> RuntimeFit:
    """Ordinary least squares for r = a + bN + cN^2."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 4:
        raise BenchlabError("runtime fit needs at least 4 points")
    n, r = pts[:, 0], pts[:, 1]
    X = np.column_stack([np.ones_like(n), n, n * n])
    if np.linalg.matrix_rank(X) < 3:
        raise BenchlabError("runtime design matrix is rank deficient (need 3 distinct sizes)")
    coef, *_ = np.linalg.lstsq(X, r, rcond=None)
    res = r - X @ coef
    dof = len(r) - 3
    s2 = float(res @ res) / dof if dof > 0 else 0.0
    cov = s2 * np.linalg.inv(X.T @ X)
    ss_tot = float(((r - r.mean()) ** 2).sum())
    r2 = 1.0 - float(res @ res) / ss_tot if ss_tot > 0 else 1.0
    return RuntimeFit(*map(float, coef), tuple(map(float, np.sqrt(np.diag(cov)))), r2, tuple(map(float, res)))


# -- simulated processors --------------------------------------------------------

@dataclass
class Instance:
    """A simulated processor with everything a sweep needs."""

    spec: GenerativeSpec
    graph: object
    layers: object
    arch: object
    data: object
    bounds: Bounds

    @classmethod
    def simulate(cls, distance: int, seed: int, priors=None) -> "Instance":
        proc = build_surface_code_lattice(distance)
        spec = GenerativeSpec(proc, priors or {}, seed=seed)
        return cls.from_spec(spec)

    @classmethod
    def from_spec(cls, spec: GenerativeSpec) -> "Instance":
        graph = build_gate_variable_graph(spec.graph)
        arch, data = generate(spec)
        return cls(spec, graph, color_cz_layers(spec.graph), arch, data, hard_bounds(data, graph))

    @classmethod
    def from_data(cls, processor, data) -> "Instance":
        graph = build_gate_variable_graph(processor)
        return cls(None, graph, color_cz_layers(processor), None, data, hard_bounds(data, graph))

    @property
    def n_qubits(self) -> int:
        return len(self.graph.processor.qubits)

    def estimator(self, weights: WeightTable, flags=MECHANISMS) -> Estimator:
        return Estimator.build(self.graph, self.data, self.layers, weights, flags=flags)

    def baseline(self, seed: int) -> FrequencyConfiguration:
        return random_baseline(self.bounds, seed, self.graph.names)


def _fanout(fn, items, jobs: int):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def _quiet_predict(est, cfg):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return predict_benchmarks(est, cfg)


@dataclass
class RunSummary:
    label: str
    seed: int
    cycle: PercentileReport | None  # None on processors without couplers
    sq: PercentileReport
    outlier_fraction: float
    value: float
    n_evals: int = 0
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self, timing: bool = False) -> dict:
        d = {"label": self.label, "seed": self.seed, "cycle": self.cycle and self.cycle.to_dict(), "sq": self.sq.to_dict(),
             "outlier_fraction": self.outlier_fraction, "value": self.value, "n_evals": self.n_evals}
        d.update(self.extra)
        if timing:
            d["wall_time"] = self.wall_time
        return d


def summarize(label: str, seed: int, est: Estimator, cfg, value=None, n_evals=0, wall=0.0, **extra) -> RunSummary:
    pred = _quiet_predict(est, cfg)
    cycle = percentile_report(pred.e_c) if len(pred.e_c) else None
    return RunSummary(label, seed, cycle, percentile_report(pred.e_sq),
                      outlier_fraction(pred), float(est.evaluate(cfg) if value is None else value),
                      int(n_evals), float(wall), extra)


def _evals(result) -> int:
    return int(sum(s.n_evals for s in result.trace))


# -- scope sweep -----------------------------------------------------------------

def _scope_label(s) -> str:
    return "Smax" if s == SCOPE_MAX else f"S{s}"


def run_scope_sweep(inst: Instance, weights: WeightTable, scopes=(1, 2, SCOPE_MAX), seeds=(0,),
                    params: SnakeParams | None = None, match_scope=2) -> list[RunSummary]:
    """Optimize at each scope.

    S_max gets (sub-problems solved at ``match_scope``) x (per-sub-problem budget)
    evaluations so the comparison is evaluation-fair.
    """
    est = inst.estimator(weights)
    base = params or SnakeParams()
    out = []
    for seed in seeds:
        spent = {}
        bad = [s for s in scopes if s != SCOPE_MAX and not isinstance(s, (int, np.integer))]
        if bad:
            raise BenchlabError(f"scopes must be integers or {SCOPE_MAX!r}, got {bad}")
        order = sorted(scopes, key=lambda s: (s == SCOPE_MAX, 0 if s == SCOPE_MAX else s))
        for s in order:
            kw = {"scope": s, "seed": seed}
            if s != SCOPE_MAX and s > 3:
                kw["traversal_rule"] = "ARB"
            if s == SCOPE_MAX:
                ref = spent.get(match_scope, max(spent.values(), default=base.budget))
                kw["global_budget"] = max(int(ref), 1)
            p = SnakeParams(**{**base.to_dict(), **kw})
            t0 = time.perf_counter()
            res = optimize(est, inst.bounds, p)
            wall = time.perf_counter() - t0
            spent[s] = len(res.trace) * p.budget
            out.append(summarize(_scope_label(s), seed, est, res.config, res.value, _evals(res), wall,
                                 steps=len(res.trace)))
    return out


# -- mitigation sweep ------------------------------------------------------------

def flag_subsets() -> list[tuple[str, ...]]:
    return [sub for r in range(len(MECHANISMS) + 1) for sub in itertools.combinations(MECHANISMS, r)]


def subset_label(sub) -> str:
    return "+".join(sub) if sub else "none"


def idle_detuning(inst: Instance, cfg: FrequencyConfiguration) -> np.ndarray:
    """f_max - f_i for every qubit, GHz."""
    g = inst.graph
    return np.array([inst.data.f_max[k] - cfg.values[g.idle_index[q]] for k, q in enumerate(inst.data.qubits)])


def run_mitigation_sweep(inst: Instance, weights: WeightTable, subsets=None, seed: int = 0,
                         params: SnakeParams | None = None) -> list[RunSummary]:
    """Optimize against each flag subset, always scoring with the full estimator."""
    full = inst.estimator(weights)
    base = params or SnakeParams()
    out = []
    for sub in (flag_subsets() if subsets is None else [tuple(s) for s in subsets]):
        t0 = time.perf_counter()
        if not sub:
            cfg, n_evals = inst.baseline(seed), 0
        else:
            est = inst.estimator(weights, flags=sub)
            res = optimize(est, inst.bounds, SnakeParams(**{**base.to_dict(), "seed": seed}))
            cfg, n_evals = res.config, _evals(res)
        wall = time.perf_counter() - t0
        det = float(np.median(idle_detuning(inst, cfg)))
        out.append(summarize(subset_label(sub), seed, full, cfg, None, n_evals, wall,
                             flags=list(sub), median_idle_detuning=det))
    return out


# -- scaling sweep ---------------------------------------------------------------

@dataclass
class ScalingResult:
    rows: list[dict]
    runs: list[RunSummary]
    fits: dict

    def to_dict(self, timing: bool = False) -> dict:
        return {"rows": self.rows, "runs": [r.to_dict(timing) for r in self.runs],
                "fits": {k: (v.to_dict() if v is not None else None) for k, v in self.fits.items()}}

    def mean_points(self, label: str, benchmark: str = "CZXEB") -> list[tuple[int, float]]:
        return [(r["N"], r["mean"]) for r in self.rows if r["label"] == label and r["benchmark"] == benchmark]


def table_row(benchmark: str, n: int, label: str, rep: PercentileReport) -> dict:
    return dict(zip(TABLE_COLUMNS, [benchmark, n, label, *rep.row()]))


def _scaling_job(args):
    d, seed, priors, weights, params, regions = args
    from .snake import make_stitch_plan, stitch

    inst = Instance.simulate(d, seed, priors)
    est = inst.estimator(weights)
    base_cfg = inst.baseline(seed)
    t0 = time.perf_counter()
    res = optimize(est, inst.bounds, SnakeParams(**{**params.to_dict(), "seed": seed}))
    wall = time.perf_counter() - t0
    pb, po = _quiet_predict(est, base_cfg), _quiet_predict(est, res.config)
    out = {"d": d, "seed": seed, "N": inst.n_qubits, "wall": wall, "evals": _evals(res),
           "Baseline": (pb.e_c, pb.e_sq, float(est.evaluate(base_cfg))),
           "Optimized": (po.e_c, po.e_sq, res.value)}
    if regions and regions > 1:
        plan = make_stitch_plan(est, regions, SnakeParams(**{**params.to_dict(), "seed": seed}))
        st = stitch(est, inst.bounds, plan)
        ps = _quiet_predict(est, st.config)
        out[f"Stitched R={regions}"] = (ps.e_c, ps.e_sq, st.value)
    return out


def run_scaling_sweep(distances=(3, 5, 7, 9, 11), seeds=(0,), priors=None, weights: WeightTable | None = None,
                      params: SnakeParams | None = None, stitch_regions: int | None = None,
                      jobs: int = 1) -> ScalingResult:
    """Baseline and optimized benchmarks per lattice size, pooled over seeds, with saturation fits."""
    weights = weights or WeightTable.reference()
    params = params or SnakeParams()
    jobs_in = [(d, s, priors, weights, params, stitch_regions) for d in sorted(distances) for s in seeds]
    done = sorted(_fanout(_scaling_job, jobs_in, jobs), key=lambda r: (r["d"], r["seed"]))
    labels = ["Baseline", "Optimized"] + ([f"Stitched R={stitch_regions}"] if stitch_regions and stitch_regions > 1
                                          else [])
    rows, runs = [], []
    for d in sorted(distances):
        grp = [r for r in done if r["d"] == d]
        n = grp[0]["N"]
        for bench, col in (("CZXEB", 0), ("SQRB", 1)):
            for lab in labels:
                vals = np.concatenate([r[lab][col] for r in grp])
                rows.append(table_row(bench, n, lab, percentile_report(vals)))
        for r in grp:
            for lab in labels:
                e_c, e_sq, val = r[lab]
                runs.append(RunSummary(lab, r["seed"], percentile_report(e_c), percentile_report(e_sq),
                                       float(np.mean(e_c >= OUTLIER_CYCLE)), float(val),
                                       r["evals"] if lab == "Optimized" else 0,
                                       r["wall"] if lab == "Optimized" else 0.0, {"d": d, "N": n}))
    res = ScalingResult(rows, runs, {})
    for lab in labels:
        pts = res.mean_points(lab)
        try:
            res.fits[lab] = fit_saturation(pts) if len(pts) >= 4 else None
        except BenchlabError:
            res.fits[lab] = None
    return res


# -- runtime sweep ---------------------------------------------------------------

def run_runtime_sweep(distances=(3, 5, 7, 9, 11, 13), seed: int = 0, priors=None,
                      weights: WeightTable | None = None, params: SnakeParams | None = None):
    """Wall time of a single optimization per lattice size; returns (points, fit)."""
    weights = weights or WeightTable.reference()
    params = params or SnakeParams()
    pts = []
    for d in distances:
        inst = Instance.simulate(d, seed, priors)
        est = inst.estimator(weights)
        t0 = time.perf_counter()
        optimize(est, inst.bounds, SnakeParams(**{**params.to_dict(), "seed": seed}))
        pts.append((inst.n_qubits, time.perf_counter() - t0))
    return pts, fit_runtime(pts)


# -- writers ---------------------------------------------------------------------

def table_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for r in rows:
        w.writerow([r["benchmark"], r["N"], r["label"]] + [f"{r[k] * 1e3:.4f}" for k in TABLE_COLUMNS[3:]])
    return buf.getvalue()


def sweep_rows(runs: list[RunSummary], n: int) -> list[dict]:
    rows = []
    for r in runs:
        if r.cycle is not None:
            rows.append(table_row("CZXEB", n, f"{r.label} (seed {r.seed})", r.cycle))
        rows.append(table_row("SQRB", n, f"{r.label} (seed {r.seed})", r.sq))
    return rows


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, fixed float formatting through json."""
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=True) + "\n"

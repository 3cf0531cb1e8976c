"""Decomposable algorithm error estimator.

E(F) = sum_g sum_m w_{g,m} eps_{g,m}(F_{g,m}), where each component eps depends
on one or two frequency variables and on characterization data.  Components
are stored column-wise and evaluated by compiled kernels; weights are tied
into a handful of groups by gate type and mechanism.
"""
from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .genmodel import CharacterizationData
from .topology import GateVariableGraph, LayerColoring

MECHANISMS = ("relaxation", "dephasing", "stray", "distortion")

GROUPS = (
    "sq.relaxation",
    "sq.dephasing",
    "sq.stray.nn",
    "sq.stray.nnn",
    "cz.relaxation",
    "cz.dephasing",
    "cz.stray.cz_nn",
    "cz.stray.cz_nnn",
    "cz.stray.spectator_nn",
    "cz.stray.spectator_nnn",
    "cz.distortion",
)
GROUP_INDEX = {g: i for i, g in enumerate(GROUPS)}
GROUP_MECHANISM = {g: ("stray" if ".stray." in g else g.split(".")[1]) for g in GROUPS}
KIND_NAMES = ("sq_relaxation", "sq_dephasing", "stray", "cz_relaxation", "cz_dephasing", "cz_distortion")

# Weights of the simulated "hardware": the map from kernels to benchmark error.
REFERENCE_WEIGHTS = {
    "sq.relaxation": 1.0,
    "sq.dephasing": 0.012,
    "sq.stray.nn": 0.004,
    "sq.stray.nnn": 0.004,
    "cz.relaxation": 1.0,
    "cz.dephasing": 0.012,
    "cz.stray.cz_nn": 0.004,
    "cz.stray.cz_nnn": 0.004,
    "cz.stray.spectator_nn": 0.004,
    "cz.stray.spectator_nnn": 0.004,
    "cz.distortion": 0.004,
}


class EstimatorError(ValueError):
    pass


class StaleCacheError(RuntimeError):
    pass


# -- weights ------------------------------------------------------------------

@dataclass
class WeightTable:
    weights: dict[str, float]
    trained: bool = False
    algorithm: str = "CZXEB"

    def __post_init__(self):
        unknown = set(self.weights) - set(GROUPS)
        if unknown:
            raise EstimatorError(f"unknown weight groups {sorted(unknown)}")
        full = {g: 0.0 for g in GROUPS}
        full.update({k: float(v) for k, v in self.weights.items()})
        if any(v < 0 or not math.isfinite(v) for v in full.values()):
            raise EstimatorError("weights must be finite and non-negative")
        self.weights = full

    @classmethod
    def uniform(cls, value: float = 1.0) -> "WeightTable":
        return cls({g: value for g in GROUPS}, trained=False)

    @classmethod
    def reference(cls) -> "WeightTable":
        return cls(dict(REFERENCE_WEIGHTS), trained=True)

    def vector(self) -> np.ndarray:
        return np.array([self.weights[g] for g in GROUPS])

    @classmethod
    def from_vector(cls, v, trained: bool = True) -> "WeightTable":
        return cls({g: float(x) for g, x in zip(GROUPS, v)}, trained=trained)

    def to_dict(self) -> dict:
        return {"algorithm": self.algorithm, "trained": self.trained, "weights": dict(self.weights)}

    @classmethod
    def from_dict(cls, d: dict) -> "WeightTable":
        if "weights" in d:
            return cls(d["weights"], bool(d.get("trained", True)), d.get("algorithm", "CZXEB"))
        return cls(d, trained=True)


# -- bounds and configurations ------------------------------------------------

@dataclass
class Bounds:
    """Per-variable closed intervals on a uniform grid anchored at the upper bound."""

    lo: np.ndarray
    hi: np.ndarray
    step: float = 0.002

    @property
    def n_points(self) -> np.ndarray:
        return np.rint((self.hi - self.lo) / self.step).astype(np.int64) + 1

    def grid(self, v: int) -> np.ndarray:
        n = int(self.n_points[v])
        return np.round(self.lo[v] + self.step * np.arange(n), 6)

    def grid_matrix(self, vars_) -> np.ndarray:
        """Rows of grid values for ``vars_``, right-padded with the last value."""
        vars_ = list(vars_)
        width = int(max(self.n_points[v] for v in vars_))
        out = np.empty((len(vars_), width))
        for i, v in enumerate(vars_):
            g = self.grid(v)
            out[i, : g.size] = g
            out[i, g.size:] = g[-1]
        return out

    def snap(self, v: int, f: float) -> float:
        k = int(np.clip(np.rint((f - self.lo[v]) / self.step), 0, self.n_points[v] - 1))
        return float(np.round(self.lo[v] + self.step * k, 6))

    def width(self) -> np.ndarray:
        return self.hi - self.lo


def _subtract(interval: tuple[float, float], cuts: list[tuple[float, float]]) -> list[tuple[float, float]]:
    pieces = [interval]
    for a, b in cuts:
        nxt = []
        for lo, hi in pieces:
            if b <= lo or a >= hi:
                nxt.append((lo, hi))
                continue
            if a > lo:
                nxt.append((lo, a))
            if b < hi:
                nxt.append((b, hi))
        pieces = nxt
    return pieces


def interval_subtract(interval, cuts):
    """Remove the open cut intervals from ``interval``; returns the remaining pieces."""
    return _subtract(tuple(interval), [tuple(c) for c in cuts])


def _snap_interval(lo: float, hi: float, step: float) -> tuple[float, float]:
    hi_s = round(hi, 6)
    k = math.floor((hi_s - lo) / step + 1e-9)
    return round(hi_s - k * step, 6), hi_s


def hard_bounds(data: CharacterizationData, graph: GateVariableGraph, sq_detuning: float = 0.45,
                cz_detuning: float = 0.70, readout_exclusion: float = 0.3, step: float = 0.002) -> Bounds:
    """Idle and interaction frequency bounds.

    Idle: [f_max - sq_detuning, f_max].  Interaction f_ij: the pair meets with the
    high qubit at f_ij + |eta|/2 and the low qubit at f_ij - |eta|/2; both must stay
    at or below their f_max, and f_ij stays within ``cz_detuning`` of the pair mean
    f_max.  Readout exclusion zones are removed and the longest piece kept.
    """
    row = {q: i for i, q in enumerate(data.qubits)}
    n = graph.n_vars
    lo = np.empty(n)
    hi = np.empty(n)
    for v in range(n):
        sup = graph.support[v]
        if len(sup) == 1:
            r = row[sup[0]]
            base = (data.f_max[r] - sq_detuning, data.f_max[r])
            cuts = [(data.readout[r] - readout_exclusion, data.readout[r] + readout_exclusion)]
        else:
            a, b = sup
            h = data.cz_high(a, b)
            lq = b if h == a else a
            rh, rl = row[h], row[lq]
            half = abs(data.eta[rh]) / 2
            top = min(data.f_max[rh] - half, data.f_max[rl] + half)
            mean = (data.f_max[rh] + data.f_max[rl]) / 2
            base = (mean - cz_detuning, top)
            cuts = [
                (data.readout[rh] - readout_exclusion - half, data.readout[rh] + readout_exclusion - half),
                (data.readout[rl] - readout_exclusion + half, data.readout[rl] + readout_exclusion + half),
            ]
        pieces = [p for p in _subtract(base, cuts) if p[1] - p[0] >= 0]
        if not pieces or base[1] < base[0]:
            raise EstimatorError(f"empty frequency bound for variable {graph.names[v]}")
        best = max(pieces, key=lambda p: (p[1] - p[0], p[1]))
        lo[v], hi[v] = _snap_interval(best[0], best[1], step)
        if lo[v] > hi[v]:
            raise EstimatorError(f"empty frequency bound for variable {graph.names[v]}")
    return Bounds(lo, hi, step)


@dataclass
class FrequencyConfiguration:
    names: tuple[str, ...]
    values: np.ndarray
    bounds: Bounds | None = None

    def __post_init__(self):
        self.values = np.round(np.asarray(self.values, dtype=float), 6)
        if self.values.shape != (len(self.names),):
            raise EstimatorError("configuration length does not match variable names")
        if self.bounds is not None:
            ok = np.isnan(self.values) | (
                (self.values >= self.bounds.lo - 1e-9) & (self.values <= self.bounds.hi + 1e-9))
            if not ok.all():
                bad = [self.names[i] for i in np.flatnonzero(~ok)]
                raise EstimatorError(f"values outside bounds for {bad[:5]}")

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])

    def copy(self) -> "FrequencyConfiguration":
        return FrequencyConfiguration(self.names, self.values.copy(), self.bounds)

    def to_dict(self) -> dict:
        return {n: (None if math.isnan(v) else round(float(v), 6)) for n, v in zip(self.names, self.values)}

    @classmethod
    def from_dict(cls, names, d: dict, bounds: Bounds | None = None) -> "FrequencyConfiguration":
        missing = [n for n in names if n not in d]
        if missing:
            raise EstimatorError(f"configuration is missing variables {missing[:5]}")
        return cls(tuple(names), np.array([np.nan if d[n] is None else float(d[n]) for n in names]), bounds)


# -- components ---------------------------------------------------------------

@dataclass
class ComponentTable:
    kind: np.ndarray
    va: np.ndarray
    vb: np.ndarray
    q: np.ndarray
    off: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    group: np.ndarray
    gate: np.ndarray

    def __len__(self):
        return self.kind.shape[0]

    def deps(self, c: int) -> tuple[int, ...]:
        a, b = int(self.va[c]), int(self.vb[c])
        return (a,) if b < 0 else (a, b)


class _Builder:
    def __init__(self):
        self.rows: list[tuple] = []

    def add(self, kind, va, vb, q, off, p1, p2, group, gate):
        self.rows.append((kind, va, vb, q, off, p1, p2, GROUP_INDEX[group], gate))

    def table(self) -> ComponentTable:
        cols = list(zip(*self.rows)) if self.rows else [()] * 9
        dtypes = (np.int8, np.int64, np.int64, np.int64, float, float, float, np.int64, np.int64)
        return ComponentTable(*(np.asarray(c, dtype=t) for c, t in zip(cols, dtypes)))


def _cz_offsets(data: CharacterizationData, a: int, b: int) -> dict[int, float]:
    """Offset from f_ij to each qubit's interaction point, from the |11>-|02> condition."""
    h = data.cz_high(a, b)
    half = abs(float(data.eta[data.qubit_row(h)])) / 2
    return {h: half, (b if h == a else a): -half}


def build_components(graph: GateVariableGraph, data: CharacterizationData, layers: LayerColoring,
                     flags=MECHANISMS, arbitrary_algorithm: bool = False) -> ComponentTable:
    flags = set(flags)
    unknown = flags - set(MECHANISMS)
    if unknown:
        raise EstimatorError(f"unknown mechanism flags {sorted(unknown)}")
    p = graph.processor
    row = {q: i for i, q in enumerate(data.qubits)}
    missing = [q for q in p.qubits if q not in row]
    if missing:
        raise EstimatorError(f"characterization data is missing qubits {missing[:5]}")
    eta = {q: float(data.eta[row[q]]) for q in p.qubits}
    chi = {pair: (h, x * 1e-3) for pair, (h, x) in data.chi.items()}  # MHz -> GHz
    b = _Builder()
    iv = graph.idle_index
    cv = graph.interaction_index

    for qb in p.qubits:
        v = iv[qb]
        if "relaxation" in flags:
            b.add(K.SQ_RELAX, v, -1, row[qb], 0.0, 0.0, 0.0, "sq.relaxation", v)
        if "dephasing" in flags:
            b.add(K.SQ_DEPH, v, -1, row[qb], 0.0, 0.0, 0.0, "sq.dephasing", v)

    def pair_chi(x, y):
        key = (x, y) if x < y else (y, x)
        return chi.get(key)

    if "stray" in flags:
        # SQ gates run concurrently in every cycle: all parasitic pairs, both victims.
        for (qa, qb), (hops, c) in sorted(chi.items()):
            tag = "sq.stray.nn" if hops == 1 else "sq.stray.nnn"
            for vic, agg in ((qa, qb), (qb, qa)):
                for ca in (0, 1):
                    for cb in (0, 1):
                        off = ca * eta[vic] - cb * eta[agg]
                        b.add(K.STRAY, iv[vic], iv[agg], -1, off, c, 0.0, tag, iv[vic])

    for (qa, qb), v in cv.items():
        offs = _cz_offsets(data, qa, qb)
        for qi in (qa, qb):
            if "relaxation" in flags:
                b.add(K.CZ_RELAX, iv[qi], v, row[qi], offs[qi], 0.0, 0.0, "cz.relaxation", v)
            if "dephasing" in flags:
                b.add(K.CZ_DEPH, iv[qi], v, row[qi], offs[qi], 0.0, 0.0, "cz.dephasing", v)
            if "distortion" in flags:
                d1, d2 = data.delta[row[qi]]
                b.add(K.CZ_DIST, iv[qi], v, row[qi], offs[qi], float(d1), float(d2), "cz.distortion", v)

    if "stray" in flags and cv:
        if arbitrary_algorithm:
            groups = [list(cv)]
        else:
            groups = [sorted(layer) for layer in layers.layers]
        for layer in groups:
            busy = {x for c in layer for x in c}
            for gate in layer:
                gv = cv[gate]
                offs = _cz_offsets(data, *gate)
                # other CZs in the same layer
                for other in layer:
                    if other == gate or set(other) & set(gate):
                        continue
                    ooffs = _cz_offsets(data, *other)
                    for qi in gate:
                        for qk in other:
                            hc = pair_chi(qi, qk)
                            if hc is None:
                                continue
                            hops, c = hc
                            tag = "cz.stray.cz_nn" if hops == 1 else "cz.stray.cz_nnn"
                            for ca in (0, 1):
                                for cb in (0, 1):
                                    off = offs[qi] - ooffs[qk] + ca * eta[qi] - cb * eta[qk]
                                    b.add(K.STRAY, gv, cv[other], -1, off, c, 0.0, tag, gv)
                # idle spectators during this layer
                for qi in gate:
                    for qk in p.qubits:
                        if qk in gate or (not arbitrary_algorithm and qk in busy):
                            continue
                        hc = pair_chi(qi, qk)
                        if hc is None:
                            continue
                        hops, c = hc
                        tag = "cz.stray.spectator_nn" if hops == 1 else "cz.stray.spectator_nnn"
                        for ca in (0, 1):
                            for cb in (0, 1):
                                off = offs[qi] + ca * eta[qi] - cb * eta[qk]
                                b.add(K.STRAY, gv, iv[qk], -1, off, c, 0.0, tag, gv)
    return b.table()


# -- estimator ----------------------------------------------------------------

def _merge_trajectory(s, w) -> tuple[np.ndarray, np.ndarray]:
    """Collapse repeated excursion fractions (the hold plateau, the mirrored ramps) into one node each."""
    su, inv = np.unique(np.asarray(s, dtype=float), return_inverse=True)
    wu = np.zeros(su.size)
    np.add.at(wu, inv, np.asarray(w, dtype=float))
    return np.ascontiguousarray(su), wu


@dataclass
class Estimator:
    graph: GateVariableGraph
    data: CharacterizationData
    table: ComponentTable
    weights: WeightTable
    flags: frozenset = frozenset(MECHANISMS)
    arbitrary_algorithm: bool = False
    layers: LayerColoring | None = None

    def __post_init__(self):
        d = self.data
        row = {q: i for i, q in enumerate(d.qubits)}
        fmax = np.zeros(len(d.qubits))
        fmax[:] = d.f_max
        t = self.table
        self._tab = (
            t.kind, t.va, t.vb, t.q, t.off, t.p1, t.p2,
            np.ascontiguousarray(d.t1_inv), np.ascontiguousarray(d.dfdphi), fmax,
            float(d.grid_start), float(d.grid_step),
            *_merge_trajectory(d.traj_s, d.traj_w),
            float(d.t_sq), float(d.t_cz),
        )
        self._wc = self.weights.vector()[t.group] if len(t) else np.zeros(0)
        n = self.graph.n_vars
        # inverse index: variable -> components depending on it (CSR)
        pairs_v = np.concatenate([t.va, t.vb[t.vb >= 0]])
        pairs_c = np.concatenate([np.arange(len(t)), np.flatnonzero(t.vb >= 0)])
        order = np.lexsort((pairs_c, pairs_v))
        self._idx_comp = pairs_c[order].astype(np.int64)
        self._idx_ptr = np.searchsorted(pairs_v[order], np.arange(n + 1)).astype(np.int64)
        self._row = row

    # construction helpers
    @classmethod
    def build(cls, graph, data, layers, weights: WeightTable | None = None, flags=MECHANISMS,
              arbitrary_algorithm: bool = False) -> "Estimator":
        table = build_components(graph, data, layers, flags, arbitrary_algorithm)
        return cls(graph, data, table, weights or WeightTable.uniform(), frozenset(flags),
                   arbitrary_algorithm, layers)

    def with_weights(self, weights: WeightTable) -> "Estimator":
        return Estimator(self.graph, self.data, self.table, weights, self.flags, self.arbitrary_algorithm,
                         self.layers)

    @property
    def n_components(self) -> int:
        return len(self.table)

    @property
    def component_weights(self) -> np.ndarray:
        return self._wc

    @property
    def kernel_table(self):
        return self._tab

    def components_of(self, v: int) -> np.ndarray:
        return self._idx_comp[self._idx_ptr[v]:self._idx_ptr[v + 1]]

    def components_touching(self, vars_) -> np.ndarray:
        parts = [self.components_of(v) for v in vars_]
        if not parts:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.concatenate(parts))

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        t = self.table
        for a in (t.kind, t.va, t.vb, t.q, t.off, t.p1, t.p2, t.group, t.gate):
            h.update(np.ascontiguousarray(a).tobytes())
        h.update(json.dumps(self.weights.to_dict(), sort_keys=True).encode())
        return h.hexdigest()[:16]

    def _x(self, f) -> np.ndarray:
        x = f.values if isinstance(f, FrequencyConfiguration) else np.asarray(f, dtype=float)
        if x.shape != (self.graph.n_vars,):
            raise EstimatorError("configuration does not match the variable set")
        if np.isnan(x).any():
            used = np.zeros(self.graph.n_vars, dtype=bool)
            used[self.table.va] = True
            used[self.table.vb[self.table.vb >= 0]] = True
            miss = np.flatnonzero(np.isnan(x) & used)
            if miss.size:
                raise EstimatorError(f"missing values for variables {[self.graph.names[i] for i in miss[:5]]}")
        return np.ascontiguousarray(x, dtype=float)

    def component_values(self, f) -> np.ndarray:
        """Unweighted kernel values eps for every component."""
        if not len(self.table):
            return np.zeros(0)
        return K.all_values(self._x(f), self._tab)

    def evaluate(self, f) -> float:
        if not len(self.table):
            return 0.0
        return float(K.weighted_total(self._x(f), self._wc, self._tab))

    def per_gate(self, f) -> np.ndarray:
        """E_g for every gate, indexed by the gate's variable."""
        w = self._wc * self.component_values(f)
        return np.bincount(self.table.gate, weights=w, minlength=self.graph.n_vars)

    def per_group_sums(self, f) -> np.ndarray:
        """Unweighted kernel sums per gate and weight group, shape (n_vars, n_groups)."""
        eps = self.component_values(f)
        out = np.zeros((self.graph.n_vars, len(GROUPS)))
        np.add.at(out, (self.table.gate, self.table.group), eps)
        return out

    def new_cache(self, f) -> "EvaluationCache":
        return EvaluationCache(self, f)


class EvaluationCache:
    """Incremental evaluation: only components touching changed variables are recomputed."""

    def __init__(self, est: Estimator, f):
        self.est = est
        self.x = est._x(f).copy()
        self.eps = est.component_values(self.x)
        self.total = float(np.dot(est._wc, self.eps)) if self.eps.size else 0.0
        self._mark = np.zeros(self.x.size, dtype=bool)

    def evaluate_delta(self, f, changed) -> float:
        est = self.est
        x = f.values if isinstance(f, FrequencyConfiguration) else f
        if x.shape != self.x.shape:
            raise EstimatorError("configuration does not match the variable set")
        if not (isinstance(changed, np.ndarray) and changed.dtype == np.int64):
            changed = np.fromiter(changed, dtype=np.int64)
        if changed.size == 0:
            if not np.array_equal(x, self.x):
                raise StaleCacheError("cached configuration differs outside the declared changed set")
            return self.total
        d, stale = K.delta_update(np.ascontiguousarray(x, dtype=float), changed, self.x, self.eps, est._wc,
                                  est._idx_ptr, est._idx_comp, self._mark, est._tab)
        if stale:
            raise StaleCacheError("cached configuration differs outside the declared changed set")
        if d != d and np.isnan(self.x[changed]).any():
            est._x(self.x)  # raises with the variable names
        self.total += d
        return self.total


# -- benchmark prediction -----------------------------------------------------

@dataclass
class BenchmarkPrediction:
    qubits: tuple[int, ...]
    pairs: tuple[tuple[int, int], ...]
    e_sq: np.ndarray  # SQRB error per qubit
    e_cz: np.ndarray  # inferred CZ error per pair
    e_c: np.ndarray  # CZXEB cycle error per pair
    untrained: bool = False

    def sq(self, q: int) -> float:
        return float(self.e_sq[self.qubits.index(q)])

    def cycle(self, a: int, b: int) -> float:
        key = (a, b) if a < b else (b, a)
        return float(self.e_c[self.pairs.index(key)])

    def to_dict(self) -> dict:
        return {
            "untrained": self.untrained,
            "sq": {str(q): float(e) for q, e in zip(self.qubits, self.e_sq)},
            "cz": {f"{a}-{b}": float(e) for (a, b), e in zip(self.pairs, self.e_cz)},
            "cycle": {f"{a}-{b}": float(e) for (a, b), e in zip(self.pairs, self.e_c)},
        }


def _benchmarks_from_gates(graph: GateVariableGraph, eg: np.ndarray, untrained: bool) -> BenchmarkPrediction:
    p = graph.processor
    e_sq = np.array([eg[graph.idle_index[q]] for q in p.qubits])
    pairs = tuple(graph.interaction_index)
    e_cz = np.array([eg[graph.interaction_index[c]] for c in pairs])
    e_c = np.array([eg[graph.idle_index[a]] + eg[graph.idle_index[b]] for a, b in pairs]) + e_cz
    return BenchmarkPrediction(tuple(p.qubits), pairs, e_sq, e_cz, e_c.reshape(-1), untrained)


def predict_benchmarks(est: Estimator, f) -> BenchmarkPrediction:
    """SQRB error per qubit and CZXEB cycle error per pair (SQ_i + SQ_j + CZ_ij)."""
    untrained = not est.weights.trained
    if untrained:
        warnings.warn("predicting benchmarks with an untrained weight table", stacklevel=2)
    return _benchmarks_from_gates(est.graph, est.per_gate(f), untrained)


# -- training -----------------------------------------------------------------

ITERATION_1 = ("sq.relaxation", "sq.dephasing", "cz.relaxation", "cz.dephasing", "cz.distortion")
ITERATION_2 = tuple(g for g in GROUPS if ".stray." in g) + ("cz.distortion",)
STRAY_GROUPS = tuple(g for g in GROUPS if ".stray." in g)


@dataclass
class TrainingSample:
    config: dict[str, float]
    benchmarks: dict  # {"sq": {qubit: e}, "cycle": {"a-b": e}}
    tag: str  # "isolated" or "parallel"

    def to_dict(self) -> dict:
        return {"config": self.config, "benchmarks": self.benchmarks, "tag": self.tag}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingSample":
        if d.get("tag") not in ("isolated", "parallel"):
            raise EstimatorError(f"training sample tag must be isolated or parallel, got {d.get('tag')!r}")
        return cls(d["config"], d["benchmarks"], d["tag"])


def benchmark_features(est: Estimator, sample: TrainingSample) -> tuple[np.ndarray, np.ndarray]:
    """Per-benchmark rows of unweighted group sums, and the measured targets."""
    g = est.graph
    f = FrequencyConfiguration.from_dict(g.names, sample.config)
    sums = est.per_group_sums(f)
    rows, y = [], []
    for q, e in sorted(sample.benchmarks.get("sq", {}).items(), key=lambda kv: int(kv[0])):
        rows.append(sums[g.idle_index[int(q)]])
        y.append(float(e))
    for key, e in sorted(sample.benchmarks.get("cycle", {}).items()):
        a, b = (int(s) for s in key.split("-"))
        a, b = min(a, b), max(a, b)
        rows.append(sums[g.idle_index[a]] + sums[g.idle_index[b]] + sums[g.interaction_index[(a, b)]])
        y.append(float(e))
    X = np.asarray(rows).reshape(-1, len(GROUPS))
    if sample.tag == "isolated":
        X = X.copy()
        X[:, [GROUP_INDEX[s] for s in STRAY_GROUPS]] = 0.0
    return X, np.asarray(y)


def adam_mae(X: np.ndarray, y: np.ndarray, w0: np.ndarray, free: np.ndarray, steps: int = 4000,
             lr: float = 0.05, lr_final: float = 1e-5, beta1: float = 0.9, beta2: float = 0.999) -> np.ndarray:
    """Minimize mean |X w - y| over the ``free`` weights with projected Adam (w >= 0).

    Columns are rescaled so each free weight moves in units of its typical contribution.
    """
    w = w0.astype(float).copy()
    if not free.any() or X.size == 0:
        return w
    yscale = max(float(np.mean(np.abs(y))), 1e-300)
    colscale = np.mean(np.abs(X), axis=0)
    colscale[colscale == 0] = 1.0
    theta = w * colscale / yscale
    Xn = X / colscale
    yn = y / yscale
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    decay = (lr_final / lr) ** (1.0 / max(steps - 1, 1))
    a = lr
    for t in range(1, steps + 1):
        r = Xn @ theta - yn
        grad = Xn.T @ np.sign(r) / len(yn)
        grad[~free] = 0.0
        m = beta1 * m + (1 - beta1) * grad
        v = beta2 * v + (1 - beta2) * grad**2
        mh = m / (1 - beta1**t)
        vh = v / (1 - beta2**t)
        theta = theta - a * mh / (np.sqrt(vh) + 1e-12)
        theta = np.maximum(theta, 0.0)
        a *= decay
    return theta * yscale / colscale


def split_train_test(n: int, frac: float = 0.6, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    perm = np.random.default_rng(seed).permutation(n)
    k = int(round(frac * n))
    return np.sort(perm[:k]), np.sort(perm[k:])


@dataclass
class TrainingResult:
    weights: WeightTable
    train_rows: dict[str, np.ndarray] = field(repr=False)
    test_rows: dict[str, np.ndarray] = field(repr=False)
    X: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    tags: np.ndarray = field(repr=False)

    def predictions(self, rows: np.ndarray) -> np.ndarray:
        return self.X[rows] @ self.weights.vector()


def train_weights(est: Estimator, samples: list[TrainingSample], seed: int = 0, steps: int = 4000,
                  frac: float = 0.6, init: WeightTable | None = None) -> TrainingResult:
    """Iterative supervised training of the tied weights.

    Iteration 1 fits relaxation, dephasing and distortion on isolated benchmarks.
    Iteration 2 freezes relaxation and dephasing and fits stray coupling and
    distortion on parallel benchmarks.  Each iteration minimizes the mean
    absolute error with Adam on a random 60 % of the benchmarks.
    """
    Xs, ys, tags = [], [], []
    for s in samples:
        X, y = benchmark_features(est, s)
        Xs.append(X)
        ys.append(y)
        tags.extend([s.tag] * len(y))
    if not Xs:
        raise EstimatorError("empty training set")
    X = np.vstack(Xs)
    y = np.concatenate(ys)
    tags = np.asarray(tags)
    train, test = split_train_test(len(y), frac, seed)
    w = (init or WeightTable.uniform(0.0)).vector()
    if init is None:
        # start every group at the same share of the mean target
        scale = np.mean(np.abs(X), axis=0)
        scale[scale == 0] = 1.0
        w = np.full(len(GROUPS), np.mean(np.abs(y)) / len(GROUPS)) / scale

    schedule = (("isolated", ITERATION_1), ("parallel", ITERATION_2))
    needed = {GROUPS[i] for i in np.unique(est.table.group)}
    fitted = _fitted_somewhere(X, train, tags, schedule)
    unfit = [g for g in GROUPS if g in needed and g not in fitted]
    if unfit:
        raise EstimatorError(f"no training coverage for weight groups: {unfit}")
    for tag, groups in schedule:
        rows = train[tags[train] == tag]
        present = [g for g in groups if rows.size and np.any(X[rows, GROUP_INDEX[g]] != 0)]
        if not present:
            continue
        free = np.zeros(len(GROUPS), dtype=bool)
        free[[GROUP_INDEX[g] for g in present]] = True
        w = adam_mae(X[rows], y[rows], w, free, steps=steps)
    train_rows = {t: train[tags[train] == t] for t in ("isolated", "parallel")}
    test_rows = {t: test[tags[test] == t] for t in ("isolated", "parallel")}
    return TrainingResult(WeightTable.from_vector(w, trained=True), train_rows, test_rows, X, y, tags)


def _fitted_somewhere(X, train, tags, schedule) -> set[str]:
    done = set()
    for tag, groups in schedule:
        rows = train[tags[train] == tag]
        for g in groups:
            if rows.size and np.any(X[rows, GROUP_INDEX[g]] != 0):
                done.add(g)
    return done


# -- accuracy -----------------------------------------------------------------

@dataclass
class AccuracyReport:
    inaccuracy: np.ndarray  # sorted
    relative: np.ndarray  # sorted, zero-measured entries excluded
    n_zero_excluded: int
    median_inaccuracy: float
    median_relative: float
    trust_region: tuple[float, float] | None

    @staticmethod
    def cdf(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        v = np.sort(values)
        return v, np.arange(1, v.size + 1) / max(v.size, 1)


def accuracy_report(predicted, measured, n_bins: int = 12) -> AccuracyReport:
    p = np.asarray(predicted, dtype=float)
    m = np.asarray(measured, dtype=float)
    if p.shape != m.shape:
        raise EstimatorError("predictions and measurements are not aligned")
    inacc = np.abs(p - m)
    pos = m > 0
    rel = inacc[pos] / m[pos]
    trust = None
    if pos.sum() >= 2 and m[pos].min() < m[pos].max():
        edges = np.geomspace(m[pos].min(), m[pos].max() * (1 + 1e-12), n_bins + 1)
        which = np.clip(np.searchsorted(edges, m[pos], side="right") - 1, 0, n_bins - 1)
        good = np.zeros(n_bins, dtype=bool)
        for b in range(n_bins):
            sel = which == b
            if sel.any():
                good[b] = np.median(inacc[pos][sel]) <= 0.5 * np.median(m[pos][sel])
        best, run = None, None
        for b in range(n_bins):
            if good[b]:
                run = (run[0], b) if run else (b, b)
                if best is None or run[1] - run[0] > best[1] - best[0]:
                    best = run
            else:
                run = None
        if best is not None:
            trust = (float(edges[best[0]]), float(edges[best[1] + 1]))
    return AccuracyReport(
        np.sort(inacc), np.sort(rel), int((~pos).sum()),
        float(np.median(inacc)) if inacc.size else float("nan"),
        float(np.median(rel)) if rel.size else float("nan"),
        trust,
    )


# -- synthetic benchmarks -----------------------------------------------------

def measure_benchmarks(truth: Estimator, f, tag: str, rng: np.random.Generator | None = None,
                       noise: float = 0.0, stride: int = 1) -> dict:
    """Benchmarks of the simulated hardware, which is the estimator under reference weights.

    Isolated benchmarks are taken with stray coupling absent.  ``noise`` is a
    relative multiplicative Gaussian error.
    """
    w = truth.weights
    if tag == "isolated":
        w = WeightTable({g: (0.0 if g in STRAY_GROUPS else x) for g, x in w.weights.items()}, trained=True)
        truth = truth.with_weights(w)
    pred = _benchmarks_from_gates(truth.graph, truth.per_gate(f), False)

    def noisy(x):
        if noise and rng is not None:
            return float(x * max(1.0 + noise * rng.standard_normal(), 0.0))
        return float(x)

    sq = {str(q): noisy(e) for q, e in list(zip(pred.qubits, pred.e_sq))[::stride]}
    cyc = {f"{a}-{b}": noisy(e) for (a, b), e in list(zip(pred.pairs, pred.e_c))[::stride]}
    return {"sq": sq, "cycle": cyc}


def random_configuration(bounds: Bounds, names, rng: np.random.Generator) -> FrequencyConfiguration:
    k = np.floor(rng.random(len(names)) * bounds.n_points).astype(np.int64)
    return FrequencyConfiguration(tuple(names), np.round(bounds.lo + bounds.step * k, 6), bounds)


def synthesize_training_set(truth: Estimator, bounds: Bounds, n_configs: int, seed: int,
                            noise: float = 0.0, extra_configs=()) -> list[TrainingSample]:
    """Isolated and parallel benchmarks in random (and optionally supplied) configurations."""
    rng = np.random.default_rng(seed)
    names = truth.graph.names
    configs = [random_configuration(bounds, names, rng) for _ in range(n_configs)]
    configs.extend(extra_configs)
    out = []
    for f in configs:
        for tag in ("isolated", "parallel"):
            out.append(TrainingSample(f.to_dict(), measure_benchmarks(truth, f, tag, rng, noise), tag))
    return out

"""Generative model for simulated characterization data.

Sampling follows a chain rule: the processor graph fixes which qubits and
qubit pairs exist, architectural parameters are drawn per qubit / pair from
independent priors, and characterization spectra are then computed from the
architectural parameters.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.signal import find_peaks

from .topology import ProcessorGraph

T_SQ = 0.025  # us
T_CZ = 0.034  # us
GRID_STEP = 0.002  # GHz
N_TRAJ = 32

FAMILIES = ("normal", "lognormal", "uniform", "halfnormal")


class GenModelError(ValueError):
    pass


@dataclass(frozen=True)
class Prior:
    """One-dimensional prior.

    normal: loc = mean, scale = sigma.  lognormal: loc = median, scale = sigma
    of the log.  uniform: [loc, loc + scale].  halfnormal: loc + |N(0, scale)|.
    Draws are clipped to [lo, hi] when given.
    """

    family: str
    loc: float
    scale: float = 0.0
    lo: float | None = None
    hi: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise GenModelError(f"unknown prior family {self.family!r}")
        if not (math.isfinite(self.loc) and math.isfinite(self.scale)) or self.scale < 0:
            raise GenModelError(f"invalid prior hyperparameters loc={self.loc}, scale={self.scale}")
        if self.family == "lognormal" and self.loc <= 0:
            raise GenModelError("lognormal prior needs a positive median")
        if self.lo is not None and self.hi is not None and self.lo > self.hi:
            raise GenModelError("prior clip bounds are inverted")

    @property
    def mean(self) -> float:
        if self.family == "normal":
            return self.loc
        if self.family == "lognormal":
            return self.loc * math.exp(self.scale**2 / 2)
        if self.family == "uniform":
            return self.loc + self.scale / 2
        return self.loc + self.scale * math.sqrt(2 / math.pi)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.family == "normal":
            x = self.loc + self.scale * rng.standard_normal(size)
        elif self.family == "lognormal":
            x = self.loc * np.exp(self.scale * rng.standard_normal(size))
        elif self.family == "uniform":
            x = self.loc + self.scale * rng.random(size)
        else:
            x = self.loc + np.abs(self.scale * rng.standard_normal(size))
        if self.lo is not None or self.hi is not None:
            x = np.clip(x, self.lo, self.hi)
        return x

    def to_dict(self) -> dict:
        d = {"family": self.family, "loc": self.loc, "scale": self.scale}
        if self.lo is not None:
            d["lo"] = self.lo
        if self.hi is not None:
            d["hi"] = self.hi
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Prior":
        return cls(d["family"], float(d["loc"]), float(d.get("scale", 0.0)), d.get("lo"), d.get("hi"))


def default_priors() -> dict[str, Prior]:
    return {
        "f_max": Prior("normal", 6.0, 0.1, lo=5.0, hi=7.0),  # GHz
        "eta": Prior("normal", -0.21, 0.0),  # GHz
        "t1_background": Prior("lognormal", 30.0, 0.25, lo=5.0),  # us
        "readout": Prior("normal", 4.8, 0.1),  # GHz
        "tls_density": Prior("normal", 1.5, 0.0, lo=0.0),  # per GHz per qubit
        "tls_depth": Prior("lognormal", 0.25, 0.6),  # 1/us added at the TLS center
        "tls_linewidth": Prior("lognormal", 16.0, 0.4),  # MHz, full width
        "chi_nn": Prior("halfnormal", 0.0, 1.5),  # MHz
        "chi_nnn": Prior("halfnormal", 0.0, 0.5),  # MHz
        "delta1": Prior("halfnormal", 0.0, 1.0),  # per GHz of excursion
        "delta2": Prior("lognormal", 1.0, 0.3),  # per GHz^2 of excursion
    }


@dataclass
class GenerativeSpec:
    graph: ProcessorGraph
    priors: dict[str, Prior] = field(default_factory=default_priors)
    seed: int = 0
    tls_span: float = 1.0  # GHz below f_max where TLS may sit
    grid_margin: float = 1.2  # GHz below the lowest f_max covered by the spectra grid

    def __post_init__(self):
        merged = default_priors()
        merged.update(self.priors)
        self.priors = merged
        for key, p in self.priors.items():
            if not isinstance(p, Prior):
                raise GenModelError(f"prior {key!r} is not a Prior")
        if not (self.tls_span > 0 and self.grid_margin > 0):
            raise GenModelError("tls_span and grid_margin must be positive")

    def with_seed(self, seed: int) -> "GenerativeSpec":
        return GenerativeSpec(self.graph, dict(self.priors), seed, self.tls_span, self.grid_margin)

    def priors_dict(self) -> dict:
        return {
            "priors": {k: p.to_dict() for k, p in sorted(self.priors.items())},
            "tls_span": self.tls_span,
            "grid_margin": self.grid_margin,
        }

    @classmethod
    def from_priors_dict(cls, graph: ProcessorGraph, d: dict, seed: int) -> "GenerativeSpec":
        priors = {k: Prior.from_dict(v) for k, v in d.get("priors", {}).items()}
        return cls(graph, priors, seed, d.get("tls_span", 1.0), d.get("grid_margin", 1.2))


@dataclass
class ArchitecturalParams:
    qubits: tuple[int, ...]
    f_max: np.ndarray
    eta: np.ndarray
    t1_background: np.ndarray
    readout: np.ndarray
    delta: np.ndarray  # (n_qubits, 2)
    tls: list[np.ndarray]  # per qubit: rows of (frequency GHz, linewidth MHz, depth 1/us)
    chi: dict[tuple[int, int], tuple[int, float]]  # (a, b) -> (hops, chi MHz)


def sample_architecture(spec: GenerativeSpec) -> ArchitecturalParams:
    g = spec.graph
    n = g.n_qubits
    pr = spec.priors
    rng = np.random.default_rng(spec.seed)
    f_max = pr["f_max"].sample(rng, n)
    eta = pr["eta"].sample(rng, n)
    if np.any(eta >= 0):
        raise GenModelError("anharmonicity prior produced a non-negative value")
    t1_bg = pr["t1_background"].sample(rng, n)
    if np.any(t1_bg <= 0):
        raise GenModelError("background T1 prior produced a non-positive value")
    readout = pr["readout"].sample(rng, n)
    delta = np.column_stack([pr["delta1"].sample(rng, n), pr["delta2"].sample(rng, n)])

    density = pr["tls_density"].sample(rng, n)
    counts = rng.poisson(np.maximum(density, 0.0) * spec.tls_span)
    tls = []
    for i in range(n):
        k = int(counts[i])
        freq = f_max[i] - spec.tls_span * rng.random(k)
        width = pr["tls_linewidth"].sample(rng, k)
        depth = pr["tls_depth"].sample(rng, k)
        if np.any(width <= 0):
            raise GenModelError("TLS linewidth prior produced a non-positive value")
        tls.append(np.column_stack([freq, width, depth]) if k else np.zeros((0, 3)))

    chi: dict[tuple[int, int], tuple[int, float]] = {}
    pairs = g.parasitic_pairs(2)
    nn = [(a, b) for a, b, h in pairs if h == 1]
    nnn = [(a, b) for a, b, h in pairs if h == 2]
    for hops, group, key in ((1, nn, "chi_nn"), (2, nnn, "chi_nnn")):
        for pair, x in zip(group, pr[key].sample(rng, len(group))):
            chi[pair] = (hops, float(x))
    return ArchitecturalParams(tuple(g.qubits), f_max, eta, t1_bg, readout, delta, tls, dict(sorted(chi.items())))


def flux_sensitivity(f: np.ndarray, f_max: float) -> np.ndarray:
    """|df/dphi| in GHz per flux quantum for a symmetric transmon, as a function of frequency.

    With f(phi) = f_max sqrt|cos(pi phi)|, inverting for phi and differentiating gives
    pi f_max sqrt(1 - x^4) / (2 x) with x = f / f_max.  Zero at and above f_max.
    """
    f = np.asarray(f, dtype=float)
    x = np.clip(f / f_max, 1e-9, 1.0)
    out = np.pi * f_max * np.sqrt(np.maximum(1.0 - x**4, 0.0)) / (2.0 * x)
    return np.where(f >= f_max, 0.0, out)


def tls_rate(f: np.ndarray, tls: np.ndarray) -> np.ndarray:
    """Sum of Lorentzian hotspots; linewidth is the full width at half maximum."""
    f = np.asarray(f, dtype=float)
    out = np.zeros_like(f)
    for f0, width_mhz, depth in tls:
        gamma = width_mhz * 1e-3 / 2
        out += depth * gamma**2 / (gamma**2 + (f - f0) ** 2)
    return out


def trajectory_profile(n: int = N_TRAJ, ramp: float = 0.25) -> tuple[np.ndarray, np.ndarray]:
    """Fractional excursion s(t) of a CZ flux pulse and trapezoid weights over t in [0, 1].

    The pulse ramps linearly from the idle to the interaction point, holds, and
    ramps back.  Weights sum to one so an integral is ``t_CZ * sum(w * g(f(s)))``.
    """
    t = np.linspace(0.0, 1.0, n)
    s = np.clip(np.minimum(t, 1.0 - t) / ramp, 0.0, 1.0)
    w = np.full(n, 1.0 / (n - 1))
    w[0] = w[-1] = 0.5 / (n - 1)
    return s, w


@dataclass
class CharacterizationData:
    qubits: tuple[int, ...]
    grid_start: float
    grid_step: float
    t1_inv: np.ndarray  # (n_qubits, n_grid) 1/us
    dfdphi: np.ndarray  # (n_qubits, n_grid) GHz per flux quantum
    f_max: np.ndarray
    eta: np.ndarray
    readout: np.ndarray
    delta: np.ndarray
    chi: dict[tuple[int, int], tuple[int, float]]
    t_sq: float = T_SQ
    t_cz: float = T_CZ
    traj_s: np.ndarray = field(default_factory=lambda: trajectory_profile()[0])
    traj_w: np.ndarray = field(default_factory=lambda: trajectory_profile()[1])
    t1_background: np.ndarray | None = None

    @property
    def n_grid(self) -> int:
        return self.t1_inv.shape[1]

    @property
    def grid(self) -> np.ndarray:
        return self.grid_start + self.grid_step * np.arange(self.n_grid)

    def qubit_row(self, q: int) -> int:
        return self.qubits.index(q)

    def cz_high(self, a: int, b: int) -> int:
        """The qubit of a pair that is pulsed into |2>, i.e. the one with higher f_max."""
        fa, fb = self.f_max[self.qubit_row(a)], self.f_max[self.qubit_row(b)]
        if fa > fb or (fa == fb and a < b):
            return a
        return b

    def to_dict(self) -> dict:
        return {
            "qubits": list(self.qubits),
            "grid": {"start": self.grid_start, "step": self.grid_step, "n": self.n_grid},
            "t1_inv": self.t1_inv.tolist(),
            "dfdphi": self.dfdphi.tolist(),
            "f_max": self.f_max.tolist(),
            "eta": self.eta.tolist(),
            "readout": self.readout.tolist(),
            "delta": self.delta.tolist(),
            "chi": [[a, b, h, x] for (a, b), (h, x) in sorted(self.chi.items())],
            "t_sq": self.t_sq,
            "t_cz": self.t_cz,
            "trajectory": {"s": self.traj_s.tolist(), "w": self.traj_w.tolist()},
            "t1_background": None if self.t1_background is None else self.t1_background.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CharacterizationData":
        t1_inv = np.asarray(d["t1_inv"], dtype=float)
        if t1_inv.ndim != 2 or t1_inv.shape[1] != d["grid"]["n"]:
            raise GenModelError("spectrum arrays do not match the declared grid")
        bg = d.get("t1_background")
        return cls(
            qubits=tuple(int(q) for q in d["qubits"]),
            grid_start=float(d["grid"]["start"]),
            grid_step=float(d["grid"]["step"]),
            t1_inv=t1_inv,
            dfdphi=np.asarray(d["dfdphi"], dtype=float),
            f_max=np.asarray(d["f_max"], dtype=float),
            eta=np.asarray(d["eta"], dtype=float),
            readout=np.asarray(d["readout"], dtype=float),
            delta=np.asarray(d["delta"], dtype=float).reshape(-1, 2),
            chi={(int(a), int(b)): (int(h), float(x)) for a, b, h, x in d["chi"]},
            t_sq=float(d["t_sq"]),
            t_cz=float(d["t_cz"]),
            traj_s=np.asarray(d["trajectory"]["s"], dtype=float),
            traj_w=np.asarray(d["trajectory"]["w"], dtype=float),
            t1_background=None if bg is None else np.asarray(bg, dtype=float),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CharacterizationData":
        return cls.from_dict(json.loads(text))


def synthesize_characterization(arch: ArchitecturalParams, graph: ProcessorGraph,
                                grid_margin: float = 1.2, step: float = GRID_STEP) -> CharacterizationData:
    rows = {q: i for i, q in enumerate(arch.qubits)}
    missing = [q for q in graph.qubits if q not in rows]
    if missing:
        raise GenModelError(f"architecture is missing qubits {missing}")
    idx = [rows[q] for q in graph.qubits]
    f_max = arch.f_max[idx]
    start = math.floor((f_max.min() - grid_margin) / step) * step
    n_grid = int(math.ceil((f_max.max() - start) / step)) + 1
    grid = start + step * np.arange(n_grid)
    t1_inv = np.empty((len(idx), n_grid))
    dfdphi = np.empty((len(idx), n_grid))
    for r, i in enumerate(idx):
        t1_inv[r] = 1.0 / arch.t1_background[i] + tls_rate(grid, arch.tls[i])
        dfdphi[r] = flux_sensitivity(grid, arch.f_max[i])
    qset = set(graph.qubits)
    chi = {p: v for p, v in arch.chi.items() if p[0] in qset and p[1] in qset}
    return CharacterizationData(
        qubits=tuple(graph.qubits),
        grid_start=round(start, 9),
        grid_step=step,
        t1_inv=t1_inv,
        dfdphi=dfdphi,
        f_max=f_max.copy(),
        eta=arch.eta[idx].copy(),
        readout=arch.readout[idx].copy(),
        delta=arch.delta[idx].copy(),
        chi=chi,
        t1_background=arch.t1_background[idx].copy(),
    )


def generate(spec: GenerativeSpec) -> tuple[ArchitecturalParams, CharacterizationData]:
    arch = sample_architecture(spec)
    return arch, synthesize_characterization(arch, spec.graph, spec.grid_margin)


# -- statistical comparison ---------------------------------------------------

DETUNING_BANDS = ((0.0, 0.15), (0.15, 0.3), (0.3, 0.45), (0.45, 0.6))  # GHz below f_max
ENVELOPE_DETUNINGS = (0.1, 0.3, 0.5)


@dataclass
class StatResult:
    name: str
    statistic: float
    p_value: float
    passed: bool


@dataclass
class ValidationReport:
    alpha: float
    results: list[StatResult]

    @property
    def pass_rate(self) -> float:
        return sum(r.passed for r in self.results) / max(len(self.results), 1)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def result(self, name: str) -> StatResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)


def _band_means(c: CharacterizationData, lo: float, hi: float) -> np.ndarray:
    grid = c.grid
    out = []
    for r in range(len(c.qubits)):
        det = c.f_max[r] - grid
        m = (det >= lo) & (det < hi)
        if m.any():
            out.append(np.log(c.t1_inv[r, m].mean()))
    return np.asarray(out)


def count_tls_peaks(c: CharacterizationData, span: float = 0.6, rel_height: float = 0.5) -> tuple[int, float]:
    """Count relaxation hotspots within ``span`` below each f_max; returns (count, GHz scanned)."""
    grid = c.grid
    total, scanned = 0, 0.0
    for r in range(len(c.qubits)):
        m = (grid <= c.f_max[r]) & (grid >= c.f_max[r] - span)
        y = c.t1_inv[r, m]
        if y.size < 3:
            continue
        floor = np.min(y)
        peaks, _ = find_peaks(y, prominence=rel_height * floor)
        total += len(peaks)
        scanned += y.size * c.grid_step
    return total, scanned


def _ks(name: str, a: np.ndarray, b: np.ndarray, alpha: float) -> StatResult:
    if a.size == 0 or b.size == 0:
        return StatResult(name, float("nan"), 1.0, True)
    res = stats.ks_2samp(a, b)
    return StatResult(name, float(res.statistic), float(res.pvalue), bool(res.pvalue >= alpha))


def validate_statistics(real: CharacterizationData, simulated: CharacterizationData,
                        alpha: float = 0.01) -> ValidationReport:
    """Two-sample comparison of summary statistics of two characterization sets."""
    if not math.isclose(real.grid_step, simulated.grid_step, rel_tol=1e-9):
        raise GenModelError(f"grid steps differ: {real.grid_step} vs {simulated.grid_step}")
    results = []
    for lo, hi in DETUNING_BANDS:
        tag = f"{int(lo * 1e3)}-{int(hi * 1e3)}MHz"
        results.append(_ks(f"t1_inv_band_{tag}", _band_means(real, lo, hi), _band_means(simulated, lo, hi), alpha))

    k1, e1 = count_tls_peaks(real)
    k2, e2 = count_tls_peaks(simulated)
    if k1 + k2 == 0:
        results.append(StatResult("tls_density", 0.0, 1.0, True))
    else:
        # conditional test for equal Poisson rates given the total count
        res = stats.binomtest(k1, k1 + k2, e1 / (e1 + e2))
        results.append(StatResult("tls_density", k1 / e1 - k2 / e2, float(res.pvalue), bool(res.pvalue >= alpha)))

    for det in ENVELOPE_DETUNINGS:
        a = np.array([flux_at(real, r, real.f_max[r] - det) for r in range(len(real.qubits))])
        b = np.array([flux_at(simulated, r, simulated.f_max[r] - det) for r in range(len(simulated.qubits))])
        results.append(_ks(f"dfdphi_{int(det * 1e3)}MHz", a, b, alpha))
    return ValidationReport(alpha, results)


def flux_at(c: CharacterizationData, row: int, f: float) -> float:
    return float(np.interp(f, c.grid, c.dfdphi[row]))

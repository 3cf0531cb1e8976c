"""Command-line entry point.

Every command stages its outputs in memory and writes them atomically into
``--out`` together with one manifest.  Exit codes: 2 bad arguments, 3 input
parse failure, 4 numerical or module failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, benchlab
from .bundle import Bundle, RunManifest, sha256_file, timestamp
from .estimator import (
    MECHANISMS, Estimator, EstimatorError, FrequencyConfiguration, StaleCacheError, TrainingSample, WeightTable,
    accuracy_report, hard_bounds, predict_benchmarks, synthesize_training_set, train_weights,
)
from .genmodel import CharacterizationData, GenerativeSpec, GenModelError, Prior, generate, validate_statistics
from .snake import (
    SCOPE_MAX, SnakeError, SnakeParams, heal, make_stitch_plan, optimize, outlier_fraction, select_heal_targets,
    stitch,
)
from .topology import (
    ProcessorGraph, TopologyError, build_gate_variable_graph, build_surface_code_lattice, color_cz_layers,
    load_sycamore68, subgraph,
)

EXIT_ARGS, EXIT_PARSE, EXIT_NUMERIC = 2, 3, 4
FILE_SUFFIXES = (".json", ".jsonl", ".csv")
STOCHASTIC = {"gen", "synth", "train", "optimize", "heal", "stitch"}


class UsageError(Exception):
    pass


class ParseError(Exception):
    pass


# -- input loading ---------------------------------------------------------------

class Inputs:
    """Reads input files, remembering their hashes for the manifest."""

    def __init__(self):
        self.hashes: dict[str, str] = {}

    def json(self, path, what: str):
        p = Path(path)
        try:
            obj = json.loads(p.read_text())
        except FileNotFoundError:
            raise ParseError(f"{what} file not found: {path}")
        except (OSError, ValueError) as exc:
            raise ParseError(f"cannot parse {what} file {path}: {exc}")
        self.hashes[f"{what}:{p.name}"] = sha256_file(p)
        return obj

    def parsed(self, path, what: str, fn):
        obj = self.json(path, what)
        try:
            return fn(obj)
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ParseError(f"malformed {what} file {path}: {exc!r}")

    def processor(self, args) -> ProcessorGraph:
        if getattr(args, "proc", None):
            return self.parsed(args.proc, "proc", ProcessorGraph.from_dict)
        if getattr(args, "char", None):
            obj = self.json(args.char, "char")
            if "processor" in obj:
                try:
                    return ProcessorGraph.from_dict(obj["processor"])
                except (KeyError, TypeError, ValueError) as exc:
                    raise ParseError(f"malformed processor block in {args.char}: {exc!r}")
        raise UsageError("need --proc (or a char file that embeds its processor)")

    def char(self, args) -> CharacterizationData:
        return self.parsed(args.char, "char", lambda d: CharacterizationData.from_dict(d.get("data", d)))

    def weights(self, args) -> WeightTable:
        if not getattr(args, "weights", None):
            return WeightTable.reference()
        return self.parsed(args.weights, "weights", WeightTable.from_dict)

    def samples(self, path) -> list[TrainingSample]:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ParseError(f"samples file not readable: {path} ({exc})")
        self.hashes[f"samples:{p.name}"] = sha256_file(p)
        out = []
        for i, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                out.append(TrainingSample.from_dict(json.loads(line)))
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"malformed training sample on line {i} of {path}: {exc!r}")
        return out

    def config(self, path, names, bounds) -> FrequencyConfiguration:
        return self.parsed(path, "config", lambda d: FrequencyConfiguration.from_dict(names, d["values"], bounds))


def _context(args, inp: Inputs):
    proc = inp.processor(args)
    data = inp.char(args)
    weights = inp.weights(args)
    graph = build_gate_variable_graph(proc)
    flags = tuple(args.flags) if getattr(args, "flags", None) else MECHANISMS
    est = Estimator.build(graph, data, color_cz_layers(proc), weights, flags=flags,
                          arbitrary_algorithm=getattr(args, "arbitrary", False))
    return proc, data, graph, est, hard_bounds(data, graph)


def _params(args) -> SnakeParams:
    try:
        scope = SCOPE_MAX if str(args.scope) == "max" else int(args.scope)
        seeds = "all" if str(args.seeds) == "all" else int(args.seeds)
        return SnakeParams(scope=scope, seeds=seeds, traversal_rule=args.rule, heuristic=args.heuristic,
                           solver=args.solver, budget=args.budget, global_budget=args.global_budget,
                           seed=args.seed, jobs=args.jobs)
    except (ValueError, SnakeError) as exc:
        raise UsageError(str(exc)) from None


def _quiet_predict(est, cfg):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return predict_benchmarks(est, cfg)


def _config_doc(cfg: FrequencyConfiguration, est: Estimator, provenance: dict) -> dict:
    return {"values": cfg.to_dict(), "units": "GHz",
            "provenance": {**provenance, "estimator": est.fingerprint(), "tool_version": __version__}}


def _prediction_doc(est, cfg) -> dict:
    pred = _quiet_predict(est, cfg)
    doc = pred.to_dict()
    cycle = benchlab.percentile_report(pred.e_c).to_dict() if len(pred.e_c) else None
    doc["summary"] = {"cycle": cycle,
                      "sq": benchlab.percentile_report(pred.e_sq).to_dict(),
                      "outlier_fraction": outlier_fraction(pred), "E": float(est.evaluate(cfg))}
    return doc


# -- commands --------------------------------------------------------------------

def cmd_topo(args, inp: Inputs, out: Bundle):
    if args.sycamore68:
        proc = load_sycamore68()
    elif args.distance is not None:
        proc = build_surface_code_lattice(args.distance)
    elif args.proc:
        proc = inp.processor(args)
    else:
        raise UsageError("topo needs --distance, --sycamore68 or --proc")
    if args.qubits:
        proc = subgraph(proc, [int(q) for q in args.qubits.split(",")])
    out.add(out.main or "proc.json", proc.to_json() + "\n")
    g = build_gate_variable_graph(proc)
    layers = color_cz_layers(proc)
    out.add_json("topology.json", {"n_qubits": len(proc.qubits), "n_couplers": len(proc.couplers),
                                   "n_variables": g.n_vars, "variables": list(g.names),
                                   "layers": {f"{a}-{b}": layers.layer_of((a, b)) for a, b in proc.couplers}})


def cmd_gen(args, inp: Inputs, out: Bundle):
    proc = inp.processor(args)
    pri = inp.json(args.priors, "priors") if args.priors else {}
    try:
        spec = GenerativeSpec.from_priors_dict(proc, pri, args.seed)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed priors file: {exc!r}")
    _arch, data = generate(spec)
    doc = {"processor": proc.to_dict(), "data": data.to_dict(), "spec": spec.priors_dict(), "seed": args.seed}
    out.add(out.main or "char.json", json.dumps(doc, sort_keys=True) + "\n")
    if args.reference:
        ref = inp.parsed(args.reference, "reference", lambda d: CharacterizationData.from_dict(d.get("data", d)))
        rep = validate_statistics(ref, data)
        out.add_json("validation.json", {"pass_rate": rep.pass_rate, "passed": rep.passed,
                                         "statistics": [vars(r) for r in rep.results]})


def cmd_synth(args, inp: Inputs, out: Bundle):
    _p, _d, _g, est, bounds = _context(args, inp)
    samples = synthesize_training_set(est, bounds, args.configs, args.seed, noise=args.noise)
    name = out.main or "bench.jsonl"
    out.add(name, "".join(json.dumps(s.to_dict(), sort_keys=True) + "\n" for s in samples))


def cmd_train(args, inp: Inputs, out: Bundle):
    _p, _d, _g, est, _b = _context(args, inp)
    samples = inp.samples(args.data)
    res = train_weights(est, samples, seed=args.seed, steps=args.steps)
    out.add_json(out.main or "weights.json", res.weights.to_dict())
    acc = {}
    for tag, rows in res.test_rows.items():
        if rows.size == 0:
            continue
        rep = accuracy_report(res.predictions(rows), res.y[rows])
        acc[tag] = {"median_inaccuracy": rep.median_inaccuracy, "median_relative": rep.median_relative,
                    "n_zero_excluded": rep.n_zero_excluded,
                    "trust_region": None if rep.trust_region is None else list(rep.trust_region)}
    out.add_json("accuracy.json", acc)


def cmd_optimize(args, inp: Inputs, out: Bundle):
    _p, _d, _g, est, bounds = _context(args, inp)
    params = _params(args)
    res = optimize(est, bounds, params)
    prov = {"command": "optimize", "params": params.to_dict(), "seed_variable": res.seed_var,
            "flags": [m for m in MECHANISMS if m in est.flags]}
    out.add_json(out.main or "config.json", _config_doc(res.config, est, prov))
    out.add_json("prediction.json", _prediction_doc(est, res.config))


def cmd_heal(args, inp: Inputs, out: Bundle):
    _p, _d, g, est, bounds = _context(args, inp)
    cfg = inp.config(args.config, g.names, bounds)
    if args.targets == "auto":
        targets = select_heal_targets(est, _quiet_predict(est, cfg))
    else:
        targets = [t.strip() for t in args.targets.split(",") if t.strip()]
        unknown = [t for t in targets if t not in g.names]
        if unknown:
            raise UsageError(f"unknown target variables {unknown}")
    if not targets:
        # nothing to heal: the configuration passes through unchanged
        out.add_json(out.main or "config.json", _config_doc(cfg, est, {"command": "heal", "targets": []}))
        out.add_json("prediction.json", _prediction_doc(est, cfg))
        return
    params = _params(args)
    res = heal(cfg, est, bounds, targets, params)
    names = [g.names[t] if isinstance(t, (int, np.integer)) else t for t in targets]
    prov = {"command": "heal", "params": params.to_dict(), "targets": names}
    out.add_json(out.main or "config.json", _config_doc(res.config, est, prov))
    out.add_json("prediction.json", _prediction_doc(est, res.config))


def cmd_stitch(args, inp: Inputs, out: Bundle):
    _p, _d, _g, est, bounds = _context(args, inp)
    params = _params(args)
    plan = make_stitch_plan(est, args.regions, params)
    res = stitch(est, bounds, plan)
    prov = {"command": "stitch", "params": params.to_dict(), "regions": args.regions,
            "seams": [est.graph.names[v] for v in plan.seams]}
    out.add_json(out.main or "config.json", _config_doc(res.config, est, prov))
    out.add_json("prediction.json", _prediction_doc(est, res.config))


def _sweep_params(d: dict, jobs: int) -> SnakeParams:
    p = dict(d.get("params", {}))
    if p.get("scope") == "max":
        p["scope"] = SCOPE_MAX
    p.setdefault("jobs", 1)
    return SnakeParams(**p)


def cmd_sweep(args, inp: Inputs, out: Bundle):
    spec = inp.json(args.spec, "spec") if args.spec else {}
    try:
        priors = {k: Prior.from_dict(v) for k, v in spec.get("priors", {}).items()}
        weights = WeightTable.from_dict(spec["weights"]) if "weights" in spec else WeightTable.reference()
        seeds = [int(s) for s in spec.get("seeds", [args.seed])]
        params = _sweep_params(spec, args.jobs)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed sweep spec: {exc!r}")
    timing = args.timing
    if args.kind == "scaling":
        res = benchlab.run_scaling_sweep(spec.get("distances", [3, 5, 7, 9, 11]), seeds, priors, weights, params,
                                         spec.get("stitch_regions"), jobs=args.jobs)
        out.add("table.csv", benchlab.table_csv(res.rows))
        out.add("results.json", benchlab.dumps(res.to_dict(timing)))
        return
    if args.kind == "runtime":
        pts, fit = benchlab.run_runtime_sweep(spec.get("distances", [3, 5, 7, 9]), seeds[0], priors, weights, params)
        out.add("results.json", benchlab.dumps({"points": pts, "fit": fit.to_dict()}))
        return
    d = int(spec.get("distance", 3))
    runs = []
    for s in seeds:
        inst = benchlab.Instance.simulate(d, s, priors)
        if args.kind == "scope":
            scopes = [SCOPE_MAX if x == "max" else int(x) for x in spec.get("scopes", [1, 2, "max"])]
            runs.extend(benchlab.run_scope_sweep(inst, weights, scopes, [s], params))
        else:
            subsets = spec.get("subsets")
            runs.extend(benchlab.run_mitigation_sweep(inst, weights, subsets, s, params))
    n = 2 * d * d - 1
    out.add("table.csv", benchlab.table_csv(benchlab.sweep_rows(runs, n)))
    out.add("results.json", benchlab.dumps({"kind": args.kind, "distance": d,
                                            "runs": [r.to_dict(timing) for r in runs]}))


def cmd_report(args, inp: Inputs, out: Bundle):
    _p, _d, g, est, bounds = _context(args, inp)
    cfg = inp.config(args.config, g.names, bounds)
    doc = _prediction_doc(est, cfg)
    pred = _quiet_predict(est, cfg)
    doc["heal_targets"] = [g.names[v] for v in select_heal_targets(est, pred)]
    std = benchlab.load_standards()
    doc["standards"] = {"outlier_cycle": std.outlier_cycle, "baseline": std.baseline.to_dict(),
                        "crossover": std.crossover.to_dict()}
    out.add_json("report.json", doc)
    n = len(g.processor.qubits)
    rows = [benchlab.table_row("SQRB", n, "Predicted", benchlab.percentile_report(pred.e_sq))]
    if len(pred.e_c):
        rows.insert(0, benchlab.table_row("CZXEB", n, "Predicted", benchlab.percentile_report(pred.e_c)))
    out.add("table.csv", benchlab.table_csv(rows))


COMMANDS = {"topo": cmd_topo, "gen": cmd_gen, "synth": cmd_synth, "train": cmd_train, "optimize": cmd_optimize,
            "heal": cmd_heal, "stitch": cmd_stitch, "sweep": cmd_sweep, "report": cmd_report}


# -- argument parsing ------------------------------------------------------------

def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="snakeopt", description="Gate-frequency optimization on simulated processors.")
    ap.add_argument("--version", action="version", version=f"snakeopt {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--out", default=".",
                       help="output directory, or a .json/.jsonl/.csv file path for the main output [path]")
        if seed:
            p.add_argument("--seed", type=int, default=None,
                           help="RNG seed; SNAKEOPT_SEED overrides it [integer]")
        p.add_argument("--jobs", type=_positive_int, default=os.cpu_count() or 1,
                       help="worker processes for multi-seed runs and sweeps [count]")

    def estimator_inputs(p, weights=True):
        p.add_argument("--proc", help="processor topology JSON; optional if --char embeds it [path]")
        p.add_argument("--char", required=True, help="characterization JSON from 'gen' [path]")
        if weights:
            p.add_argument("--weights", help="weight table JSON; defaults to the reference table [path]")
        p.add_argument("--flags", nargs="+", choices=MECHANISMS, default=None,
                       help="mitigation mechanisms in the estimator, default all [names]")
        p.add_argument("--arbitrary", action="store_true",
                       help="penalize stray coupling between all gate pairs, not only CZXEB layers [switch]")

    def snake_opts(p):
        p.add_argument("--scope", default="2", help="scope S: integer >= 1 or 'max' [variables, ~S^2]")
        p.add_argument("--seeds", default="1", help="seed variables: 'all' or a count [count]")
        p.add_argument("--rule", default="NN", choices=("NN", "NNN", "ARB"), help="traversal rule [enum]")
        p.add_argument("--heuristic", default="BFS", choices=("BFS", "DFS", "RND"),
                       help="traversal heuristic [enum]")
        p.add_argument("--solver", default="auto", choices=("auto", "exhaustive", "stochastic"),
                       help="inner-loop solver [enum]")
        p.add_argument("--budget", type=_positive_int, default=2000,
                       help="stochastic inner-solve budget [estimator evaluations]")
        p.add_argument("--global-budget", type=_positive_int, default=None,
                       help="budget of the single solve at scope 'max' [estimator evaluations]")

    p = sub.add_parser("topo", help="build a processor topology")
    p.add_argument("--distance", type=_positive_int, help="surface-code distance d, N = 2d^2-1 [lattice units]")
    p.add_argument("--sycamore68", action="store_true", help="bundled 68-qubit layout [switch]")
    p.add_argument("--proc", help="existing topology to cut down [path]")
    p.add_argument("--qubits", help="comma-separated qubit ids to keep [ids]")
    common(p, seed=False)

    p = sub.add_parser("gen", help="sample a simulated processor's characterization data")
    p.add_argument("--proc", required=True, help="processor topology JSON [path]")
    p.add_argument("--spec", "--priors", dest="priors",
                   help="prior overrides JSON (GHz, us, MHz as per prior name) [path]")
    p.add_argument("--reference", help="characterization to validate against [path]")
    common(p)

    p = sub.add_parser("synth", help="synthesize benchmark training data from a weight table")
    estimator_inputs(p)
    p.add_argument("--configs", type=_positive_int, default=20, help="random configurations [count]")
    p.add_argument("--noise", type=float, default=0.0, help="multiplicative benchmark noise [fraction]")
    common(p)

    p = sub.add_parser("train", help="fit weights to benchmark samples")
    estimator_inputs(p, weights=False)
    p.add_argument("--data", "--samples", dest="data", required=True,
                   help="training samples, JSON lines of {config, benchmarks, tag} [path]")
    p.add_argument("--steps", type=_positive_int, default=4000, help="Adam steps per iteration [count]")
    common(p)

    p = sub.add_parser("optimize", help="run Snake")
    estimator_inputs(p)
    snake_opts(p)
    common(p)

    p = sub.add_parser("heal", help="re-optimize outlier gates with everything else fixed")
    estimator_inputs(p)
    p.add_argument("--config", required=True, help="configuration JSON to heal [path]")
    p.add_argument("--targets", default="auto", help="'auto' or comma-separated variable names [names]")
    snake_opts(p)
    common(p)

    p = sub.add_parser("stitch", help="optimize disjoint regions and reconcile their seams")
    estimator_inputs(p)
    p.add_argument("--regions", type=_positive_int, default=2, help="number of regions R [count]")
    snake_opts(p)
    common(p)

    p = sub.add_parser("sweep", help="simulation studies (tables + JSON bundle)")
    p.add_argument("kind", choices=("scope", "mitigation", "scaling", "runtime"), help="study [enum]")
    p.add_argument("--spec", help="sweep spec JSON: distance(s), seeds, priors, weights, params [path]")
    p.add_argument("--timing", action="store_true",
                   help="include wall times; makes outputs run-dependent [switch]")
    common(p)

    p = sub.add_parser("report", help="predicted benchmarks and outliers of a configuration")
    estimator_inputs(p)
    p.add_argument("--config", required=True, help="configuration JSON [path]")
    common(p, seed=False)
    return ap


def _command_record(argv: list[str]) -> list[str]:
    # paths are reduced to file names so manifests do not depend on where a run happened
    rec = []
    for a in argv:
        rec.append(Path(a).name if os.sep in a else a)
    return rec


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    env_seed = os.environ.get("SNAKEOPT_SEED")
    if hasattr(args, "seed"):
        if env_seed is not None:
            try:
                args.seed = int(env_seed)
            except ValueError:
                print("snakeopt: SNAKEOPT_SEED must be an integer", file=sys.stderr)
                return EXIT_ARGS
        if args.seed is None and args.command in STOCHASTIC:
            print(f"snakeopt {args.command}: --seed is required", file=sys.stderr)
            return EXIT_ARGS
        if args.seed is None:
            args.seed = 0
    out_path = Path(args.out)
    if out_path.suffix in FILE_SUFFIXES:
        bundle = Bundle(out_path.parent, f"{out_path.stem}.manifest.json")
        bundle.main = out_path.name
    else:
        bundle = Bundle(out_path)
        bundle.main = None
    inp = Inputs()
    started = timestamp()
    try:
        COMMANDS[args.command](args, inp, bundle)
    except UsageError as exc:
        print(f"snakeopt {args.command}: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except ParseError as exc:
        print(f"snakeopt {args.command}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (TopologyError, GenModelError, EstimatorError, SnakeError, StaleCacheError, benchlab.BenchlabError,
            FloatingPointError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"snakeopt {args.command}: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    seeds = {"seed": getattr(args, "seed", None)}
    manifest = RunManifest(_command_record(argv), seeds, dict(sorted(inp.hashes.items())), started=started)
    bundle.commit(manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())

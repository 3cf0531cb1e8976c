import hashlib
import json
from pathlib import Path

import pytest

from snakeopt.bundle import Bundle, RunManifest, atomic_write
from snakeopt.cli import build_parser, main


def run(args, cwd, monkeypatch):
    monkeypatch.chdir(cwd)
    return main([str(a) for a in args])


@pytest.fixture
def env(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    monkeypatch.delenv("SNAKEOPT_SEED", raising=False)
    return monkeypatch


def pipeline(d: Path, mp):
    d.mkdir(parents=True, exist_ok=True)
    steps = [
        ["topo", "--distance", 3, "--out", "proc.json"],
        ["gen", "--proc", "proc.json", "--seed", 7, "--out", "char.json"],
        ["synth", "--char", "char.json", "--configs", 6, "--seed", 1, "--out", "bench.jsonl"],
        ["train", "--char", "char.json", "--data", "bench.jsonl", "--seed", 1, "--steps", 800,
         "--out", "weights.json"],
        ["optimize", "--char", "char.json", "--weights", "weights.json", "--scope", 2, "--seed", 3,
         "--out", "config.json"],
        ["heal", "--char", "char.json", "--weights", "weights.json", "--config", "config.json",
         "--targets", "auto", "--seed", 3, "--out", "healed.json"],
        ["report", "--char", "char.json", "--weights", "weights.json", "--config", "healed.json",
         "--out", "report"],
    ]
    for s in steps:
        assert run(s, d, mp) == 0, s


def tree(d: Path) -> dict:
    return {str(p.relative_to(d)): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def test_topo_distance_3(tmp_path, env):
    assert run(["topo", "--distance", 3], tmp_path, env) == 0
    proc = json.loads((tmp_path / "proc.json").read_text())
    assert len(proc["qubits"]) == 17
    assert set(json.loads((tmp_path / "manifest.json").read_text())["outputs"]) == {"proc.json", "topology.json"}
    assert run(["topo", "--distance", 3, "--out", "p.json"], tmp_path, env) == 0
    man = json.loads((tmp_path / "p.manifest.json").read_text())
    assert set(man["outputs"]) == {"p.json", "p.topology.json"}


def test_pipeline_byte_identical(tmp_path, env):
    pipeline(tmp_path / "a", env)
    pipeline(tmp_path / "b", env)
    a, b = tree(tmp_path / "a"), tree(tmp_path / "b")
    assert a.keys() == b.keys()
    assert a == b


def test_manifest_hashes_verify(tmp_path, env):
    pipeline(tmp_path, env)
    for mf in tmp_path.rglob("*manifest.json"):
        man = json.loads(mf.read_text())
        for name, digest in man["outputs"].items():
            assert hashlib.sha256((mf.parent / name).read_bytes()).hexdigest() == digest
        for key, digest in man["inputs"].items():
            path = tmp_path / key.split(":", 1)[1]
            assert hashlib.sha256(path.read_bytes()).hexdigest() == digest
        assert man["started"] == "1970-01-01T00:00:00Z"
    cfg = json.loads((tmp_path / "config.json").read_text())
    assert cfg["units"] == "GHz" and {"params", "estimator"} <= set(cfg["provenance"])
    assert all(isinstance(v, float) for v in cfg["values"].values())


def test_missing_input_exit_3_no_outputs(tmp_path, env):
    code = run(["optimize", "--char", "nope.json", "--seed", 1, "--out", "res"], tmp_path, env)
    assert code == 3
    assert not (tmp_path / "res").exists()


def test_malformed_input_exit_3(tmp_path, env):
    (tmp_path / "char.json").write_text("{not json")
    assert run(["optimize", "--char", "char.json", "--seed", 1, "--out", "c.json"], tmp_path, env) == 3
    assert not (tmp_path / "c.json").exists()


def test_seed_mandatory(tmp_path, env):
    run(["topo", "--distance", 2, "--out", "proc.json"], tmp_path, env)
    assert run(["gen", "--proc", "proc.json", "--out", "char.json"], tmp_path, env) == 2
    env.setenv("SNAKEOPT_SEED", "5")
    assert run(["gen", "--proc", "proc.json", "--out", "char.json"], tmp_path, env) == 0
    assert json.loads((tmp_path / "char.json").read_text())["seed"] == 5


def test_env_seed_overrides_flag(tmp_path, env):
    run(["topo", "--distance", 2, "--out", "proc.json"], tmp_path, env)
    env.setenv("SNAKEOPT_SEED", "9")
    run(["gen", "--proc", "proc.json", "--seed", 1, "--out", "a.json"], tmp_path, env)
    env.delenv("SNAKEOPT_SEED")
    run(["gen", "--proc", "proc.json", "--seed", 9, "--out", "b.json"], tmp_path, env)
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_bad_arguments_exit_2(tmp_path, env):
    run(["topo", "--distance", 2, "--out", "proc.json"], tmp_path, env)
    run(["gen", "--proc", "proc.json", "--seed", 1, "--out", "char.json"], tmp_path, env)
    assert run(["optimize", "--char", "char.json", "--scope", 0, "--seed", 1, "--out", "c.json"], tmp_path, env) == 2
    assert run(["optimize", "--char", "char.json", "--scope", 4, "--seed", 1, "--out", "c.json"], tmp_path, env) == 2
    assert run(["frobnicate"], tmp_path, env) == 2
    assert not (tmp_path / "c.json").exists()


def test_numerical_failure_exit_4(tmp_path, env):
    # a runtime fit over two sizes is underdetermined
    (tmp_path / "spec.json").write_text(json.dumps({"distances": [2, 3], "params": {"budget": 100}}))
    assert run(["sweep", "runtime", "--spec", "spec.json", "--seed", 0, "--out", "r"], tmp_path, env) == 4
    assert not (tmp_path / "r").exists()


def test_invalid_weights_exit_3(tmp_path, env):
    run(["topo", "--distance", 2, "--out", "proc.json"], tmp_path, env)
    run(["gen", "--proc", "proc.json", "--seed", 1, "--out", "char.json"], tmp_path, env)
    (tmp_path / "w.json").write_text(json.dumps({"weights": {"sq.relaxation": -1.0}}))
    code = run(["optimize", "--char", "char.json", "--weights", "w.json", "--seed", 1, "--out", "c.json"],
               tmp_path, env)
    assert code == 3


def test_heal_named_and_empty_targets(tmp_path, env):
    run(["topo", "--distance", 2, "--out", "proc.json"], tmp_path, env)
    run(["gen", "--proc", "proc.json", "--seed", 1, "--out", "char.json"], tmp_path, env)
    run(["optimize", "--char", "char.json", "--seed", 1, "--out", "c.json"], tmp_path, env)
    base = ["heal", "--char", "char.json", "--config", "c.json", "--seed", 1]
    assert run(base + ["--targets", "q0", "--out", "h.json"], tmp_path, env) == 0
    assert run(base + ["--targets", "q99", "--out", "h2.json"], tmp_path, env) == 2
    c = json.loads((tmp_path / "c.json").read_text())["values"]
    h = json.loads((tmp_path / "h.json").read_text())["values"]
    hinged = {"q0"} | {n for n in c if "-" in n and "q0" in n.split("-")}
    assert all(c[n] == h[n] for n in c if n not in hinged)


def test_stitch_regions(tmp_path, env):
    run(["topo", "--distance", 3, "--out", "proc.json"], tmp_path, env)
    run(["gen", "--proc", "proc.json", "--seed", 1, "--out", "char.json"], tmp_path, env)
    assert run(["stitch", "--char", "char.json", "--regions", 2, "--seed", 1, "--out", "s.json"], tmp_path, env) == 0
    assert json.loads((tmp_path / "s.json").read_text())["provenance"]["command"] == "stitch"


@pytest.mark.parametrize("kind", ["scope", "mitigation", "scaling"])
def test_sweep_outputs(tmp_path, env, kind):
    spec = {"distance": 2, "distances": [2, 3], "seeds": [0], "params": {"budget": 200},
            "subsets": [[], ["dephasing"]]}
    (tmp_path / "spec.json").write_text(json.dumps(spec))
    assert run(["sweep", kind, "--spec", "spec.json", "--out", "results"], tmp_path, env) == 0
    header = (tmp_path / "results" / "table.csv").read_text().splitlines()[0]
    assert header == "benchmark,N,label,min,max,mean,p2.5,p25,p50,p75,p97.5"
    man = json.loads((tmp_path / "results" / "manifest.json").read_text())
    assert set(man["outputs"]) == {"table.csv", "results.json"}
    assert "wall_time" not in (tmp_path / "results" / "results.json").read_text()


def test_sweep_malformed_spec(tmp_path, env):
    (tmp_path / "spec.json").write_text(json.dumps({"priors": {"f_max": {"family": "gamma", "loc": 6}}}))
    assert run(["sweep", "scope", "--spec", "spec.json", "--out", "r"], tmp_path, env) == 3


def test_help_lists_units(capsys):
    parser = build_parser()
    sub = parser._subparsers._group_actions[0]
    for name, p in sub.choices.items():
        for action in p._actions:
            if action.help and action.dest != "help":
                assert action.help.rstrip().endswith("]"), (name, action.dest)


def test_atomic_write_leaves_no_temp(tmp_path):
    p = tmp_path / "x.json"
    atomic_write(p, "{}\n")
    atomic_write(p, "[]\n")
    assert p.read_text() == "[]\n"
    assert [q.name for q in tmp_path.iterdir()] == ["x.json"]


def test_bundle_rejects_escape(tmp_path):
    b = Bundle(tmp_path)
    with pytest.raises(ValueError):
        b.add("../evil.txt", "")
    b.add("a.txt", "hi")
    b.commit(RunManifest(["x"], {}, {}))
    assert json.loads((tmp_path / "manifest.json").read_text())["outputs"] == {
        "a.txt": hashlib.sha256(b"hi").hexdigest()}

import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from snakeopt.benchlab import (
    TABLE_COLUMNS, BenchlabError, Instance, PercentileReport, experimental_means, fit_runtime, fit_saturation,
    flag_subsets, load_scaling_experiment, load_standards, percentile_report, random_baseline,
    run_mitigation_sweep, run_scaling_sweep, run_scope_sweep, saturation_model, subset_label, sweep_rows,
    table_csv,
)
from snakeopt.estimator import Bounds, WeightTable
from snakeopt.genmodel import GenerativeSpec, generate
from snakeopt.snake import SCOPE_MAX, LocalProblem, SnakeParams, inner_solve
from snakeopt.topology import ProcessorGraph

PAPER_SAT = (22.0, 3.1e-3, 7.5e-3)  # N_sat, e_scale, e_sat of the optimized experimental fit


# -- percentile reports ---------------------------------------------------------------

def test_single_value_report():
    r = percentile_report([5.0])
    assert r.row() == [5.0] * 8 and r.n == 1


def test_one_to_hundred_median():
    r = percentile_report(np.arange(1, 101))
    assert r.p50 == 50.5
    assert (r.min, r.max, r.mean) == (1.0, 100.0, 50.5)
    # order-statistic oracle for linear interpolation
    v = np.arange(1, 101)
    for p, got in zip((2.5, 25, 75, 97.5), (r.p2_5, r.p25, r.p75, r.p97_5)):
        h = (len(v) - 1) * p / 100
        lo = int(np.floor(h))
        assert got == pytest.approx(v[lo] + (h - lo) * (v[min(lo + 1, 99)] - v[lo]))


def test_empty_report_rejected():
    with pytest.raises(BenchlabError):
        percentile_report([])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=60))
def test_report_monotone(values):
    r = percentile_report(values)
    row = [r.min, r.p2_5, r.p25, r.p50, r.p75, r.p97_5, r.max]
    assert all(a <= b for a, b in zip(row, row[1:]))


def test_report_dict_roundtrip():
    r = percentile_report([1.0, 2.0, 7.0])
    assert PercentileReport.from_dict(r.to_dict()) == r


def test_standards_replay_baseline_median():
    s = load_standards()
    assert s.baseline.p50 == pytest.approx(16.7e-3)
    assert s.crossover.p50 == pytest.approx(6.2e-3)
    assert s.outlier_cycle == pytest.approx(1.5e-2)
    assert (s.baseline_n, s.crossover_n) == (68, 49)


def test_scaling_table_reference():
    rows = load_scaling_experiment()
    assert len(rows) == 48
    for r in rows:
        vals = [r[k] for k in ("min", "p2.5", "p25", "p50", "p75", "p97.5", "max")]
        assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))
    pts = experimental_means("Optimized")
    assert [n for n, _ in pts] == sorted(n for n, _ in pts)
    assert any(n == 68 for n, _ in pts)


# -- random baseline -----------------------------------------------------------------

def test_degenerate_bounds():
    b = Bounds(np.array([5.5, 6.1]), np.array([5.5, 6.1]))
    cfg = random_baseline(b, 3)
    assert cfg.values.tolist() == [5.5, 6.1]


def test_two_seeds_differ(inst3):
    a = random_baseline(inst3.bounds, 1, inst3.graph.names)
    b = random_baseline(inst3.bounds, 2, inst3.graph.names)
    assert not np.array_equal(a.values, b.values)


def test_baseline_uniform():
    b = Bounds(np.array([5.0]), np.array([5.198]))  # 100 grid points
    draws = np.array([random_baseline(b, s).values[0] for s in range(10_000)])
    counts, _ = np.histogram(draws, bins=10, range=(5.0 - 1e-9, 5.198 + 1e-9))
    assert stats.chisquare(counts).pvalue > 0.001


# -- saturation and runtime fits ---------------------------------------------------------

def test_saturation_recovers_generator():
    n = np.array([6, 12, 17, 24, 31, 40, 49, 60, 68, 84, 97], dtype=float)
    fit = fit_saturation(np.column_stack([n, saturation_model(n, *PAPER_SAT)]))
    for got, want in zip((fit.n_sat, fit.e_scale, fit.e_sat), PAPER_SAT):
        assert got == pytest.approx(want, rel=0.01)
    assert max(abs(r) for r in fit.residuals) < 1e-9


def test_saturation_constant_data():
    n = np.array([10, 20, 40, 80, 160], dtype=float)
    fit = fit_saturation(np.column_stack([n, np.full(5, 6e-3)]))
    assert fit.e_sat == pytest.approx(6e-3, rel=1e-6)
    assert abs(fit.e_scale * np.exp(-n.min() / fit.n_sat)) < 1e-9


def test_saturation_needs_points():
    with pytest.raises(BenchlabError):
        fit_saturation([(1, 1e-3), (2, 2e-3), (3, 3e-3)])
    with pytest.raises(BenchlabError):
        fit_saturation([(1, 1e-3), (1, 2e-3), (2, 3e-3), (2, 3e-3)])


def test_saturation_experimental_optimized():
    fit = fit_saturation(experimental_means("Optimized"))
    sigma = load_standards_sigma()
    assert abs(fit.e_sat - 7.5e-3) <= 2 * sigma


def load_standards_sigma():
    from importlib import resources
    raw = json.loads(resources.files("snakeopt").joinpath("data/standards.json").read_text())
    return raw["saturation_experiment"]["optimized"]["e_sat"][1] * 1e-3


def test_runtime_exact_quadratic():
    n = np.array([17, 49, 97, 161, 241, 337], dtype=float)
    fit = fit_runtime(np.column_stack([n, 2.0 + 0.5 * n + 1e-3 * n * n]))
    assert (fit.a, fit.b, fit.c) == pytest.approx((2.0, 0.5, 1e-3), rel=1e-9)
    assert fit.r2 == pytest.approx(1.0)


def test_runtime_linear():
    n = np.array([17, 49, 97, 161, 241], dtype=float)
    fit = fit_runtime(np.column_stack([n, 1.0 + 0.3 * n]))
    assert abs(fit.c) < 1e-9
    assert fit(200) == pytest.approx(61.0)


def test_runtime_rank_deficient():
    with pytest.raises(BenchlabError):
        fit_runtime([(10, 1.0), (10, 1.1), (20, 2.0), (20, 2.2)])


# -- sweeps -----------------------------------------------------------------------

def _one_qubit_instance():
    p = ProcessorGraph((0,), {0: (0, 0)}, ())
    return Instance.from_data(p, generate(GenerativeSpec(p, seed=2))[1])


def test_scope_sweep_single_variable():
    inst = _one_qubit_instance()
    w = WeightTable.reference()
    runs = run_scope_sweep(inst, w, scopes=(1,), seeds=(0,))
    assert len(runs) == 1 and runs[0].label == "S1"
    est = inst.estimator(w)
    prob = LocalProblem.build(est, [0], np.full(1, np.nan), np.zeros(1, dtype=bool), inst.bounds)
    idx, val = inner_solve(prob, SnakeParams(), np.random.default_rng(0))
    assert runs[0].value == pytest.approx(val, rel=1e-12)
    assert runs[0].cycle is None and runs[0].sq.p50 == pytest.approx(val, rel=1e-12)


def test_scope_sweep_budget_matching(inst3):
    runs = run_scope_sweep(inst3, WeightTable.reference(), scopes=(2, SCOPE_MAX), params=SnakeParams(budget=100))
    by = {r.label: r for r in runs}
    assert by["Smax"].extra["steps"] == 1
    # the global solve may spend exactly the S=2 allowance
    assert by["Smax"].n_evals <= by["S2"].extra["steps"] * 100


def test_scope_sweep_rejects_unknown_scope(inst3):
    with pytest.raises(BenchlabError):
        run_scope_sweep(inst3, WeightTable.reference(), scopes=(1, "Smax"))


def test_flag_subsets():
    subs = flag_subsets()
    assert len(subs) == 16 and len(set(subs)) == 16
    assert subs[0] == () and len(subs[-1]) == 4
    assert subset_label(()) == "none"
    assert subset_label(("dephasing", "stray")) == "dephasing+stray"


def test_mitigation_sweep_scores_with_full_estimator(inst3):
    w = WeightTable.reference()
    runs = run_mitigation_sweep(inst3, w, subsets=[(), ("dephasing",)], params=SnakeParams(budget=200))
    full = inst3.estimator(w)
    base = inst3.baseline(0)
    assert runs[0].value == pytest.approx(full.evaluate(base), rel=1e-12)
    assert runs[1].extra["flags"] == ["dephasing"]
    assert runs[1].extra["median_idle_detuning"] < 0.05


def test_scaling_single_distance_shape():
    res = run_scaling_sweep(distances=(2,), seeds=(0,), params=SnakeParams(budget=200))
    czxeb = [r for r in res.rows if r["benchmark"] == "CZXEB"]
    assert [r["label"] for r in czxeb] == ["Baseline", "Optimized"]
    assert all(r["N"] == 7 for r in czxeb)
    assert res.fits == {} or all(v is None for v in res.fits.values())


def test_scaling_sweep_reproducible():
    a = run_scaling_sweep(distances=(2, 3), seeds=(0, 1), params=SnakeParams(budget=200))
    b = run_scaling_sweep(distances=(2, 3), seeds=(0, 1), params=SnakeParams(budget=200))
    assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(b.to_dict(), sort_keys=True)


def test_table_csv_columns(inst3):
    runs = run_scope_sweep(inst3, WeightTable.reference(), scopes=(1,))
    text = table_csv(sweep_rows(runs, 17))
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == TABLE_COLUMNS
    assert len(rows) == 3
    assert float(rows[1][TABLE_COLUMNS.index("p50")]) == pytest.approx(runs[0].cycle.p50 * 1e3, abs=1e-4)

"""End-to-end acceptance checks.

Each test implements one criterion at its stated tolerance and is tagged
with the ``acceptance`` marker; the terminal summary prints one pass/fail
line per criterion.
"""

from __future__ import annotations

import time
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from hpcadvisor import (
    AppInput,
    BenchmarkRecord,
    Dataset,
    ScalingCurve,
    Scenario,
    SimulatorBackend,
    cli,
    evaluate,
    execute_plan,
    fit_scaling_factor,
    fixtures,
    interpolate,
    load_catalog,
    load_grid,
    load_model,
    minimize,
    pareto_front,
    plan,
    predict_cross_input,
    run_scenarios,
)
from hpcadvisor.dataset import scenario_key

from test_advisor import brute_force_classify, point


def exhaustive_dataset(grid, model, catalog):
    scenarios = [
        Scenario(sku, n, catalog[sku].cores_per_vm, inp)
        for sku in grid.sku_names
        for inp in grid.inputs
        for n in grid.node_counts
    ]
    outcomes = run_scenarios(scenarios, SimulatorBackend(model), catalog)
    return Dataset(
        BenchmarkRecord(o.scenario, o.exec_time_s, "simulated") for o in outcomes
    )


@pytest.mark.acceptance("1", "optimizer matches linear-solve oracle")
def test_criterion_1_optimizer_correctness():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    for _ in range(100):
        dim = int(rng.integers(1, 6))
        m = rng.normal(size=(dim, dim))
        a = m.T @ m + 0.5 * np.eye(dim)
        b = rng.normal(size=dim)
        x_star = np.linalg.solve(a, b)  # oracle: direct Gaussian elimination

        def f(x):
            return 0.5 * float(x @ a @ x) - float(b @ x)

        result = minimize(f, rng.normal(size=dim))
        assert np.max(np.abs(result.x_min - x_star)) <= 1e-6

    rosen = lambda x: (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2
    result = minimize(rosen, [-1.2, 1.0])
    assert np.max(np.abs(result.x_min - 1.0)) <= 1e-4
    assert time.perf_counter() - start < 5.0


@pytest.mark.acceptance("2", "fit matches closed-form least squares")
def test_criterion_2_fit_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(202)
    for _ in range(100):
        n_points = int(rng.integers(3, 9))
        nodes = np.sort(rng.choice(np.arange(1, 64), size=n_points, replace=False))
        times = rng.uniform(1.0, 1e4, size=n_points)
        source = ScalingCurve(
            sku_name="src",
            input=AppInput("cfd_demo", "cells", 1e6),
            procs_per_vm=16,
            points=tuple((int(n), float(t)) for n, t in zip(nodes, times)),
        )
        k = int(rng.integers(1, 4))
        targets = [
            (float(rng.uniform(nodes[0], nodes[-1])), float(rng.uniform(1.0, 1e4)))
            for _ in range(k)
        ]
        fit = fit_scaling_factor(source, targets)
        f_vals = np.array([interpolate(source, n) for n, _ in targets])
        t_vals = np.array([t for _, t in targets])
        star = float(t_vals @ f_vals) / float(f_vals @ f_vals)
        assert abs(fit.factor - star) / star <= 1e-6

        def objective(s):
            d = s * f_vals - t_vals
            return float(d @ d)

        best = objective(fit.factor)
        for s in rng.uniform(star / 10.0, 10.0 * star, size=100):
            assert best <= objective(float(s)) + 1e-9
    assert time.perf_counter() - start < 5.0


@pytest.mark.acceptance("3", "pareto matches brute-force dominance")
def test_criterion_3_pareto_oracle():
    import random

    start = time.perf_counter()
    rng = random.Random(303)
    for trial in range(1000):
        n = rng.randint(1, 12)
        if trial % 2:
            pts = [point(rng.randint(1, 4), rng.randint(1, 4), i) for i in range(n)]
        else:
            pts = [point(rng.uniform(1, 50), rng.uniform(1, 50), i) for i in range(n)]
        result = pareto_front(pts)
        front, dominated = brute_force_classify(pts)
        key = lambda p: (p.exec_time_s, p.cost, scenario_key(p.scenario))
        assert list(result.front) == front
        assert sorted(result.dominated, key=key) == sorted(dominated, key=key)
    assert time.perf_counter() - start < 2.0


@pytest.mark.acceptance("4", "exact recovery on shared scaling shape")
def test_criterion_4_exact_recovery():
    start = time.perf_counter()
    catalog = load_catalog(fixtures.catalog_path())
    grid = load_grid(fixtures.grid_path())
    assert grid.node_counts == (1, 2, 4, 8, 16)
    assert len(grid.sku_names) == 3 and len(grid.inputs) == 3
    # shared shape g(n) scaled by per-SKU constants 1.0 / 0.6 / 0.45
    model = load_model(fixtures.shared_model_path())
    assert model.noise_sigma == 0.0
    plan_ = plan(grid, 2, catalog=catalog)
    assert len(plan_.executed) == 9
    assert plan_.total == 45
    assert plan_.reduction_percent == pytest.approx(80.0)
    result = execute_plan(plan_, SimulatorBackend(model), catalog)
    executed = [r for r in result.dataset if r.provenance == "simulated"]
    assert len(executed) == 9
    report = evaluate(result.dataset, exhaustive_dataset(grid, model, catalog))
    assert report.count == 36
    assert report.mape <= 0.1
    assert time.perf_counter() - start < 5.0


@pytest.mark.acceptance("5", "robustness under mixed alpha and noise")
def test_criterion_5_robustness_regime():
    start = time.perf_counter()
    catalog = load_catalog(fixtures.catalog_path())
    grid = load_grid(fixtures.grid_path())
    model = load_model(fixtures.demo_model_path()).with_seed(42)
    alphas = sorted(perf.alpha for perf in model.skus.values())
    assert alphas == [0.9, 0.95, 1.0]
    assert model.noise_sigma == 0.02
    plan_ = plan(grid, 2, catalog=catalog)
    result = execute_plan(plan_, SimulatorBackend(model), catalog)
    report = evaluate(result.dataset, exhaustive_dataset(grid, model, catalog))
    assert report.count == 36
    assert report.mape <= 15.0
    assert report.max_ape <= 30.0
    assert time.perf_counter() - start < 10.0


@pytest.mark.acceptance("6", "cross-input composition and identity")
def test_criterion_6_cross_input_properties():
    rng = np.random.default_rng(606)
    for _ in range(100):
        n_points = int(rng.integers(2, 8))
        nodes = np.sort(rng.choice(np.arange(1, 40), size=n_points, replace=False))
        base_value = float(rng.uniform(1e5, 1e7))
        curve = ScalingCurve(
            sku_name="any",
            input=AppInput("cfd_demo", "cells", base_value),
            procs_per_vm=8,
            points=tuple(
                (int(n), float(rng.uniform(0.5, 5e3))) for n in nodes
            ),
        )
        v1 = AppInput("cfd_demo", "cells", base_value * float(rng.uniform(0.2, 5.0)))
        v2 = AppInput("cfd_demo", "cells", base_value * float(rng.uniform(0.2, 5.0)))
        composed = predict_cross_input(predict_cross_input(curve, v1), v2)
        direct = predict_cross_input(curve, v2)
        for (_, a), (_, b) in zip(composed.points, direct.points):
            assert abs(a - b) <= 1e-12 * abs(b)
        assert predict_cross_input(curve, curve.input).points == curve.points


@pytest.mark.acceptance("7", "byte-identical pipeline under parallelism")
def test_criterion_7_determinism(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv(cli.HOME_ENV, raising=False)
    fixtures.copy_fixtures(tmp_path)

    def pipeline(out, parallel):
        base = [
            "--catalog", str(tmp_path / fixtures.CATALOG),
            "--out", str(tmp_path / out),
        ]
        assert cli.main([
            "simulate", "--grid", str(tmp_path / fixtures.GRID),
            "--model", str(tmp_path / fixtures.MODEL_DEMO),
            "--probes", "2", "--seed", "42", "--parallel", str(parallel), *base,
        ]) == 0
        assert cli.main([
            "predict", "--grid", str(tmp_path / fixtures.GRID),
            "--seed", "42", *base,
        ]) == 0
        assert cli.main(["advise", "--input", "cells=1e6", *base]) == 0
        for kind in ("time_vs_vms", "cost_vs_vms"):
            assert cli.main([
                "report", "--kind", kind, "--input", "cells=1e6", *base,
            ]) == 0

    pipeline("serial", parallel=1)
    pipeline("threaded", parallel=8)
    names = [
        "dataset.jsonl", "pareto.csv", "pareto.svg",
        "time_vs_vms.csv", "time_vs_vms.svg", "cost_vs_vms.csv", "cost_vs_vms.svg",
    ]
    for name in names:
        a = (tmp_path / "serial" / name).read_bytes()
        b = (tmp_path / "threaded" / name).read_bytes()
        assert a == b, f"{name} differs between runs"


@pytest.mark.acceptance("8", "end-to-end demo emits plots and table")
def test_criterion_8_end_to_end_demo(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv(cli.HOME_ENV, raising=False)
    start = time.perf_counter()
    fixtures.copy_fixtures(tmp_path)
    catalog = load_catalog(tmp_path / fixtures.CATALOG)
    assert catalog.names() == ("HC", "HBv2", "HBv3")
    base = [
        "--catalog", str(tmp_path / fixtures.CATALOG),
        "--out", str(tmp_path / "demo"),
    ]
    assert cli.main([
        "simulate", "--grid", str(tmp_path / fixtures.GRID),
        "--model", str(tmp_path / fixtures.MODEL_DEMO),
        "--seed", "42", *base,
    ]) == 0
    assert cli.main(["advise", "--input", "cells=1e6", *base]) == 0
    out = capsys.readouterr().out
    assert "pareto front for cfd_demo cells=1e+06" in out
    for kind in ("time_vs_vms", "cost_vs_vms"):
        assert cli.main(["report", "--kind", kind, "--input", "cells=1e6", *base]) == 0

    ns = "{http://www.w3.org/2000/svg}"
    for name in ("time_vs_vms.svg", "cost_vs_vms.svg", "pareto.svg"):
        root = ET.parse(tmp_path / "demo" / name).getroot()
        assert root.tag == f"{ns}svg"
        assert root.get("viewBox") == "0 0 800 500"
        assert [e for e in root.iter() if e.get("class") == "series"]
    table = (tmp_path / "demo" / "pareto.csv").read_text().splitlines()
    assert table[0].endswith("pareto")
    assert len(table) == 16  # header + 15 candidate rows
    assert time.perf_counter() - start < 10.0

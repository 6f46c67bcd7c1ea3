"""Shared fixtures plus per-criterion pass/fail reporting for acceptance tests."""

from __future__ import annotations

from datetime import datetime, timezone

import pytest

from hpcadvisor import AppInput, BenchmarkRecord, Scenario, fixtures, load_catalog, load_grid, load_model

_ACCEPTANCE_RESULTS: dict[tuple, str] = {}


def pytest_runtest_makereport(item, call):
    if call.when != "call":
        return
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    key = tuple(marker.args)
    outcome = "PASS" if call.excinfo is None else "FAIL"
    # parametrized criteria: one FAIL poisons the criterion
    if _ACCEPTANCE_RESULTS.get(key) != "FAIL":
        _ACCEPTANCE_RESULTS[key] = outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for (num, title), outcome in sorted(_ACCEPTANCE_RESULTS.items()):
        terminalreporter.write_line(f"criterion {num} ({title}): {outcome}")


@pytest.fixture(scope="session")
def catalog():
    return load_catalog(fixtures.catalog_path())


@pytest.fixture(scope="session")
def demo_grid():
    return load_grid(fixtures.grid_path())


@pytest.fixture(scope="session")
def shared_model():
    return load_model(fixtures.shared_model_path())


@pytest.fixture(scope="session")
def demo_model():
    return load_model(fixtures.demo_model_path())


def make_input(value: float = 1e6, param: str = "cells", app: str = "cfd_demo") -> AppInput:
    return AppInput(app_name=app, param_name=param, value=value)


def make_scenario(
    sku: str = "HBv2", n: int = 1, procs: int = 120, value: float = 1e6
) -> Scenario:
    return Scenario(sku_name=sku, n_vms=n, procs_per_vm=procs, input=make_input(value))


def make_record(
    sku: str = "HBv2",
    n: int = 1,
    time_s: float = 100.0,
    provenance: str = "measured",
    method: str | None = None,
    procs: int = 120,
    value: float = 1e6,
) -> BenchmarkRecord:
    return BenchmarkRecord(
        scenario=make_scenario(sku, n, procs, value),
        exec_time_s=time_s,
        provenance=provenance,
        method=method,
        timestamp=datetime(2024, 5, 1, tzinfo=timezone.utc),
    )

"""Scenario-reduction planning and execution.

A plan runs the baseline SKU across the whole node range, probes every
other SKU at one or two node counts, and predicts everything else:
remaining nodes of other SKUs via the fitted cross-VM factor, and all
non-base input values via input-ratio multiplication. ``evaluate``
quantifies prediction error against exhaustively executed ground truth.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

from .dataset import (
    AppInput,
    BenchmarkRecord,
    Dataset,
    Scenario,
    VmCatalog,
    extract_curve,
    record_sort_key,
    scenario_key,
)
from .errors import (
    NoDataError,
    ParseError,
    PlannerError,
    PlanningError,
    UserError,
    ValidationError,
)
from .executor import ExecutionOutcome
from .optimizer import OptimizerConfig
from .predictor import CROSS_INPUT, CROSS_VM, ScalingFit, fit_scaling_factor, predict_cross_vm

ALL_CORES = "all-cores"

# provenances accepted as executed ground data when deriving predictions
_SOURCE_PROVENANCES = ("measured", "simulated")


@dataclass(frozen=True)
class ScenarioGrid:
    """The axes of a benchmarking study: SKUs x node counts x input values."""

    sku_names: tuple[str, ...]
    node_counts: tuple[int, ...]
    inputs: tuple[AppInput, ...]
    procs_per_vm: int | str = ALL_CORES

    def __post_init__(self):
        object.__setattr__(self, "sku_names", tuple(self.sku_names))
        object.__setattr__(self, "node_counts", tuple(int(n) for n in self.node_counts))
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if not self.sku_names or not self.node_counts or not self.inputs:
            raise ValidationError("grid axes must be non-empty")
        if len(set(self.sku_names)) != len(self.sku_names):
            raise ValidationError("grid SKU names must be unique")
        nodes = self.node_counts
        if nodes[0] < 1 or any(b <= a for a, b in zip(nodes, nodes[1:])):
            raise ValidationError("node counts must be strictly increasing positive integers")
        apps = {i.app_name for i in self.inputs}
        params = {i.param_name for i in self.inputs}
        if len(apps) != 1 or len(params) != 1:
            raise ValidationError("grid inputs must share one app and one parameter")
        if len({i.value for i in self.inputs}) != len(self.inputs):
            raise ValidationError("grid input values must be unique")
        if self.procs_per_vm != ALL_CORES and (
            not isinstance(self.procs_per_vm, int) or self.procs_per_vm < 1
        ):
            raise ValidationError(
                f"procs_per_vm must be a positive integer or '{ALL_CORES}'"
            )

    @property
    def total(self) -> int:
        return len(self.sku_names) * len(self.node_counts) * len(self.inputs)


def load_grid(path: str | Path) -> ScenarioGrid:
    """Read a grid definition from a JSON object file."""
    path = Path(path)
    if not path.exists():
        raise UserError(f"file not found: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, f"invalid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise ParseError(path, 1, "grid file must hold a JSON object")
    for key in ("sku_names", "node_counts", "app_name", "param_name", "param_values"):
        if key not in obj:
            raise ParseError(path, 1, f"grid file missing field '{key}'")
    try:
        inputs = tuple(
            AppInput(app_name=str(obj["app_name"]), param_name=str(obj["param_name"]), value=v)
            for v in obj["param_values"]
        )
        return ScenarioGrid(
            sku_names=tuple(str(s) for s in obj["sku_names"]),
            node_counts=tuple(obj["node_counts"]),
            inputs=inputs,
            procs_per_vm=obj.get("procs_per_vm", ALL_CORES),
        )
    except (TypeError, ValidationError) as exc:
        raise ParseError(path, 1, str(exc)) from exc


def resolve_procs(grid: ScenarioGrid, sku_name: str, catalog: VmCatalog | None) -> int:
    if isinstance(grid.procs_per_vm, int):
        return grid.procs_per_vm
    if catalog is None:
        raise PlanningError(
            "grid uses the all-cores policy; a catalog is required to resolve procs_per_vm"
        )
    return catalog[sku_name].cores_per_vm


@dataclass(frozen=True)
class ScenarioPlan:
    """Partition of a grid into executed scenarios and predicted ones."""

    baseline_sku: str
    executed: tuple[Scenario, ...]
    predicted: tuple[tuple[Scenario, str], ...]  # (scenario, method)
    probe_counts: Mapping[str, int] = field(default_factory=dict)
    calibrated_inputs: bool = False

    @property
    def total(self) -> int:
        return len(self.executed) + len(self.predicted)

    @property
    def reduction_percent(self) -> float:
        return 100.0 * len(self.predicted) / self.total

    @property
    def base_input(self) -> AppInput:
        # plans list the baseline node sweep first
        return self.executed[0].input


def plan(
    grid: ScenarioGrid,
    probes_per_sku: int,
    baseline: str | None = None,
    *,
    catalog: VmCatalog | None = None,
    calibrate_inputs: bool = False,
    param_scaling: Mapping[str, str] | None = None,
) -> ScenarioPlan:
    """Partition the grid into runs to execute and scenarios to predict.

    The baseline SKU (lexicographically first by default) is executed at
    every node count for the first input value. Every other SKU is probed
    at the largest node count, plus the smallest when ``probes_per_sku``
    is 2. With ``calibrate_inputs`` each extra input value also gets one
    baseline run at the largest node count, later used to rescale its
    cross-input predictions.
    """
    if probes_per_sku not in (1, 2):
        raise PlanningError(f"probes_per_sku must be 1 or 2, got {probes_per_sku}")
    if baseline is None:
        baseline = min(grid.sku_names)
    elif baseline not in grid.sku_names:
        raise PlanningError(f"baseline SKU '{baseline}' is not in the grid")
    param = grid.inputs[0].param_name
    policy = (param_scaling or {}).get(param, "linear")
    if len(grid.inputs) > 1 and policy == "none":
        raise PlanningError(
            f"parameter '{param}' is configured as non-scalable; cannot plan "
            "cross-input predictions over it"
        )

    base_input = grid.inputs[0]
    if probes_per_sku == 1 or len(grid.node_counts) == 1:
        probe_nodes = (grid.node_counts[-1],)
    else:
        # probes at the range endpoints maximize the span usable by the fit
        probe_nodes = (grid.node_counts[0], grid.node_counts[-1])
    procs = {sku: resolve_procs(grid, sku, catalog) for sku in grid.sku_names}

    executed = [
        Scenario(baseline, n, procs[baseline], base_input) for n in grid.node_counts
    ]
    for sku in grid.sku_names:
        if sku == baseline:
            continue
        for n in probe_nodes:
            executed.append(Scenario(sku, n, procs[sku], base_input))
    if calibrate_inputs:
        for inp in grid.inputs[1:]:
            executed.append(Scenario(baseline, grid.node_counts[-1], procs[baseline], inp))

    executed_keys = {scenario_key(s) for s in executed}
    predicted = []
    for sku in grid.sku_names:
        for inp in grid.inputs:
            for n in grid.node_counts:
                scenario = Scenario(sku, n, procs[sku], inp)
                if scenario_key(scenario) in executed_keys:
                    continue
                method = CROSS_VM if inp == base_input else CROSS_INPUT
                predicted.append((scenario, method))

    probe_counts = {sku: len(probe_nodes) for sku in grid.sku_names if sku != baseline}
    return ScenarioPlan(
        baseline_sku=baseline,
        executed=tuple(executed),
        predicted=tuple(predicted),
        probe_counts=probe_counts,
        calibrated_inputs=calibrate_inputs,
    )


def format_plan_summary(plan_: ScenarioPlan) -> str:
    """Structured text summary: counts, reduction, probe placement."""
    lines = [
        f"executed {len(plan_.executed)} / {plan_.total} "
        f"({plan_.reduction_percent:.1f}% reduction)",
        f"baseline SKU: {plan_.baseline_sku} "
        f"(full node sweep at {plan_.base_input.param_name}={plan_.base_input.value:g})",
    ]
    for sku in sorted(plan_.probe_counts):
        nodes = sorted(
            s.n_vms
            for s in plan_.executed
            if s.sku_name == sku and s.input == plan_.base_input
        )
        lines.append(f"probes: {sku} at n_vms={nodes}")
    n_cross_vm = sum(1 for _, m in plan_.predicted if m == CROSS_VM)
    n_cross_input = len(plan_.predicted) - n_cross_vm
    lines.append(f"predicted: {n_cross_vm} cross-vm, {n_cross_input} cross-input")
    if plan_.calibrated_inputs:
        lines.append("input calibration runs included")
    return "\n".join(lines)


def run_scenarios(
    scenarios: Sequence[Scenario],
    backend,
    catalog: VmCatalog,
    parallelism: int = 1,
) -> list[ExecutionOutcome]:
    """Run scenarios through a backend, optionally in parallel.

    Output order matches input order regardless of completion order, and a
    backend that raises despite its contract is folded into a failed
    outcome rather than taking down the batch.
    """
    if parallelism < 1:
        raise ValidationError("parallelism must be >= 1")

    def run_one(scenario: Scenario) -> ExecutionOutcome:
        try:
            return backend.run(scenario, catalog)
        except Exception as exc:  # backend contract: never panic the pipeline
            return ExecutionOutcome(scenario, None, "failed", f"{type(exc).__name__}: {exc}")

    if parallelism == 1 or len(scenarios) <= 1:
        return [run_one(s) for s in scenarios]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(run_one, scenarios))


def derive_predictions(
    plan_: ScenarioPlan,
    dataset: Dataset,
    *,
    optimizer_config: OptimizerConfig | None = None,
    param_scaling: Mapping[str, str] | None = None,
    stamp: datetime | None = None,
) -> tuple[list[BenchmarkRecord], dict[str, ScalingFit]]:
    """Create the predicted records a plan promises, from executed data.

    Cross-VM: fit each non-baseline SKU's factor from its probe runs
    against the baseline curve and scale the baseline curve. Cross-input:
    multiply each SKU's base curve (measured values where available,
    predicted elsewhere) by the input-value ratio. Probe runs that failed
    are tolerated as long as at least one usable probe per SKU remains.
    """
    stamp = stamp if stamp is not None else datetime.now(timezone.utc)
    base_input = plan_.base_input
    baseline = plan_.baseline_sku
    baseline_procs = plan_.executed[0].procs_per_vm
    try:
        source = extract_curve(
            dataset, baseline, base_input, baseline_procs, _SOURCE_PROVENANCES
        )
    except NoDataError as exc:
        raise PlannerError(f"baseline SKU '{baseline}': {exc}") from exc

    fits: dict[str, ScalingFit] = {}
    curves: dict[str, dict[int, float]] = {baseline: dict(source.points)}
    measured_probes: dict[str, dict[int, float]] = {}
    probe_skus = sorted({s.sku_name for s in plan_.executed if s.sku_name != baseline})
    for sku in probe_skus:
        probes = {}
        for scenario in plan_.executed:
            if scenario.sku_name != sku or scenario.input != base_input:
                continue
            record = dataset.lookup(scenario, _SOURCE_PROVENANCES)
            if record is not None:
                probes[scenario.n_vms] = record.exec_time_s
        measured_probes[sku] = probes
        # a degraded baseline sweep can shrink the interpolable span
        usable = [
            (n, t) for n, t in sorted(probes.items())
            if source.min_node <= n <= source.max_node
        ]
        if not usable:
            raise PlannerError(
                f"cannot fit a scaling factor for SKU '{sku}': no usable probe runs"
            )
        fit = fit_scaling_factor(source, usable, optimizer_config)
        fits[sku] = fit
        predicted_curve = predict_cross_vm(source, fit, sku)
        curves[sku] = dict(predicted_curve.points)

    records: list[BenchmarkRecord] = []
    for scenario, method in plan_.predicted:
        if method != CROSS_VM:
            continue
        value = curves[scenario.sku_name].get(scenario.n_vms)
        if value is None:
            continue  # node missing from a degraded baseline sweep
        records.append(BenchmarkRecord(scenario, value, "predicted", CROSS_VM, stamp))

    # base curve per SKU for cross-input scaling: measured where we have it
    base_values: dict[str, dict[int, float]] = {}
    for sku, values in curves.items():
        merged = dict(values)
        merged.update(measured_probes.get(sku, {}))
        base_values[sku] = merged

    param = base_input.param_name
    policy = (param_scaling or {}).get(param, "linear")
    input_scale: dict[AppInput, float] = {}
    if plan_.calibrated_inputs:
        for scenario in plan_.executed:
            if scenario.sku_name != baseline or scenario.input == base_input:
                continue
            record = dataset.lookup(scenario, _SOURCE_PROVENANCES)
            raw = base_values[baseline].get(scenario.n_vms)
            if record is not None and raw is not None:
                ratio = scenario.input.value / base_input.value
                input_scale[scenario.input] = record.exec_time_s / (raw * ratio)

    for scenario, method in plan_.predicted:
        if method != CROSS_INPUT:
            continue
        if policy == "none":
            raise PlannerError(
                f"parameter '{param}' is configured as non-scalable; "
                "cannot derive cross-input predictions"
            )
        base = base_values[scenario.sku_name].get(scenario.n_vms)
        if base is None:
            continue
        ratio = scenario.input.value / base_input.value
        value = base * ratio * input_scale.get(scenario.input, 1.0)
        records.append(BenchmarkRecord(scenario, value, "predicted", CROSS_INPUT, stamp))

    records.sort(key=record_sort_key)
    return records, fits


@dataclass(frozen=True)
class PlanExecution:
    """Everything a plan run produced: data, failures, fitted factors."""

    dataset: Dataset
    failures: tuple[ExecutionOutcome, ...]
    fits: Mapping[str, ScalingFit] = field(default_factory=dict)


def execute_plan(
    plan_: ScenarioPlan,
    backend,
    catalog: VmCatalog,
    dataset: Dataset | None = None,
    *,
    parallelism: int = 1,
    stamp: datetime | None = None,
    optimizer_config: OptimizerConfig | None = None,
    param_scaling: Mapping[str, str] | None = None,
) -> PlanExecution:
    """Run the plan's executed scenarios, then derive its predicted records.

    Per-scenario executor failures degrade the result instead of aborting:
    they are collected into ``failures`` and prediction proceeds from
    whatever probe data survived.
    """
    dataset = dataset if dataset is not None else Dataset()
    stamp = stamp if stamp is not None else datetime.now(timezone.utc)
    outcomes = run_scenarios(plan_.executed, backend, catalog, parallelism)
    executed_records = [
        BenchmarkRecord(o.scenario, o.exec_time_s, backend.provenance, None, stamp)
        for o in outcomes
        if o.status == "ok"
    ]
    failures = tuple(o for o in outcomes if o.status != "ok")
    merged = dataset.merge(executed_records)
    predicted_records, fits = derive_predictions(
        plan_,
        merged,
        optimizer_config=optimizer_config,
        param_scaling=param_scaling,
        stamp=stamp,
    )
    return PlanExecution(
        dataset=merged.merge(predicted_records), failures=failures, fits=fits
    )


@dataclass(frozen=True)
class EvalRow:
    scenario: Scenario
    actual: float
    predicted: float
    ape_pct: float


@dataclass(frozen=True)
class PredictionReport:
    """Per-scenario absolute percentage errors with their mean and max."""

    rows: tuple[EvalRow, ...]
    mape: float
    max_ape: float
    count: int

    def __post_init__(self):
        if not 0.0 <= self.mape <= self.max_ape:
            raise ValidationError("requires 0 <= mape <= max_ape")


def evaluate(predicted: Dataset, ground_truth: Dataset) -> PredictionReport:
    """Score every predicted record against executed ground truth."""
    pred_records = [r for r in predicted.records if r.provenance == "predicted"]
    if not pred_records:
        raise NoDataError("dataset contains no predicted records to evaluate")
    rows = []
    for record in pred_records:
        truth = ground_truth.lookup(record.scenario, _SOURCE_PROVENANCES)
        if truth is None:
            raise NoDataError(
                f"ground truth missing for scenario: {record.scenario.describe()}"
            )
        ape = abs(record.exec_time_s - truth.exec_time_s) / truth.exec_time_s * 100.0
        rows.append(EvalRow(record.scenario, truth.exec_time_s, record.exec_time_s, ape))
    apes = [r.ape_pct for r in rows]
    return PredictionReport(
        rows=tuple(rows),
        mape=sum(apes) / len(apes),
        max_ape=max(apes),
        count=len(rows),
    )

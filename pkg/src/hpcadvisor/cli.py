"""Command-line pipeline: ingest, simulate, plan, fit, predict, advise, report.

One dataset file is the pipeline's shared state; every subcommand reads
and/or atomically rewrites it and prints a short summary. Exit codes:
0 success (including partial executor failures, which are warnings),
1 user error, 2 internal or backend error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

from . import advisor, dataset as ds, executor, planner, predictor, report
from .errors import AdvisorError, NoDataError, UserError

EXIT_OK = 0
EXIT_USER = 1
EXIT_INTERNAL = 2

HOME_ENV = "HPCADVISOR_HOME"

_STAMP_BASE = datetime(2000, 1, 1, tzinfo=timezone.utc)


def _seed_stamp(seed: int) -> datetime:
    # records produced by a run are stamped deterministically from the seed
    # so identical invocations rewrite identical files
    return _STAMP_BASE + timedelta(seconds=int(seed))


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # bad flags/subcommands are user errors: exit 1
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USER)


def _parse_input(text: str) -> tuple[str, float]:
    name, sep, raw = text.partition("=")
    if not sep or not name:
        raise UserError(f"--input must look like name=value, got '{text}'")
    try:
        value = float(raw)
    except ValueError:
        raise UserError(f"--input value must be numeric, got '{raw}'") from None
    return name, value


def _parse_scaling(entries: list[str] | None) -> dict[str, str]:
    policies = {}
    for entry in entries or ():
        name, sep, policy = entry.partition("=")
        if not sep or policy not in ("linear", "none"):
            raise UserError(
                f"--param-scaling must look like name=linear or name=none, got '{entry}'"
            )
        policies[name] = policy
    return policies


def _out_dir(args) -> Path:
    out = getattr(args, "out", None) or os.environ.get(HOME_ENV) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _dataset_path(args) -> Path:
    if getattr(args, "dataset", None):
        return Path(args.dataset)
    return _out_dir(args) / "dataset.jsonl"


def _load_dataset(path: Path) -> ds.Dataset:
    return ds.load_dataset(path) if path.exists() else ds.Dataset()


def _require_catalog(args) -> ds.VmCatalog:
    if not getattr(args, "catalog", None):
        raise UserError("--catalog is required for this command")
    return ds.load_catalog(args.catalog)


def _resolve_app(data: ds.Dataset, app: str | None) -> str:
    if app:
        return app
    apps = data.app_names()
    if len(apps) == 1:
        return apps[0]
    if not apps:
        raise NoDataError("dataset is empty; run simulate or ingest first")
    raise UserError(f"dataset holds several apps ({', '.join(apps)}); pass --app")


def _resolve_input(args, data: ds.Dataset) -> ds.AppInput:
    param, value = _parse_input(args.input)
    return ds.AppInput(app_name=_resolve_app(data, args.app), param_name=param, value=value)


def _make_backend(args):
    if args.backend == "simulate":
        if not args.model:
            raise UserError("--model is required with the simulate backend")
        model = executor.load_model(args.model).with_seed(args.seed)
        return executor.SimulatorBackend(model)
    if args.backend == "replay":
        if not args.replay_dataset:
            raise UserError("--replay-dataset is required with the replay backend")
        return executor.ReplayBackend(ds.load_dataset(args.replay_dataset))
    return executor.CloudStubBackend()


def _grid_plan(args, catalog: ds.VmCatalog) -> planner.ScenarioPlan:
    grid = planner.load_grid(args.grid)
    return planner.plan(
        grid,
        args.probes,
        args.baseline,
        catalog=catalog,
        calibrate_inputs=getattr(args, "calibrate_inputs", False),
        param_scaling=_parse_scaling(getattr(args, "param_scaling", None)),
    )


def _infer_procs(data: ds.Dataset, sku_name: str, input: ds.AppInput) -> int:
    records = data.match(input=input, sku_name=sku_name)
    if not records:
        raise NoDataError(f"no records for SKU '{sku_name}' at {input.describe()}")
    procs = sorted({r.scenario.procs_per_vm for r in records})
    if len(procs) > 1:
        raise UserError(
            f"SKU '{sku_name}' has records at several procs_per_vm values "
            f"({procs}); pass --procs"
        )
    return procs[0]


def _print_failures(failures) -> None:
    for outcome in failures:
        print(f"warning: {outcome.scenario.describe()}: {outcome.detail}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest(args) -> int:
    path = _dataset_path(args)
    data = _load_dataset(path)
    total_added = total_replaced = total_rejected = 0
    for name in args.files:
        result = ds.ingest_records(name, data)
        data = result.dataset
        total_added += result.added
        total_replaced += result.replaced
        total_rejected += len(result.rejected)
        for lineno, reason in result.rejected:
            print(f"warning: {name}:{lineno}: rejected: {reason}")
        print(
            f"ingested {result.added + result.replaced} records from {name} "
            f"({result.replaced} replaced, {len(result.rejected)} rejected)"
        )
    ds.save_dataset(data, path)
    print(f"dataset: {path} ({len(data)} records)")
    return EXIT_OK


def cmd_simulate(args) -> int:
    catalog = _require_catalog(args)
    grid = planner.load_grid(args.grid)
    backend = _make_backend(args)
    stamp = _seed_stamp(args.seed)
    if args.probes:
        plan_ = _grid_plan(args, catalog)
        scenarios = plan_.executed
        print(planner.format_plan_summary(plan_))
    else:
        scenarios = tuple(
            ds.Scenario(sku, n, planner.resolve_procs(grid, sku, catalog), inp)
            for sku in grid.sku_names
            for inp in grid.inputs
            for n in grid.node_counts
        )
        print(f"executing full grid: {len(scenarios)} scenarios")
    outcomes = planner.run_scenarios(scenarios, backend, catalog, args.parallel)
    records = [
        ds.BenchmarkRecord(o.scenario, o.exec_time_s, backend.provenance, None, stamp)
        for o in outcomes
        if o.status == "ok"
    ]
    failures = [o for o in outcomes if o.status != "ok"]
    _print_failures(failures)
    path = _dataset_path(args)
    data = _load_dataset(path).merge(records)
    ds.save_dataset(data, path)
    print(f"executed {len(records)} ok, {len(failures)} failed -> {path}")
    return EXIT_OK


def cmd_plan(args) -> int:
    catalog = ds.load_catalog(args.catalog) if args.catalog else None
    grid = planner.load_grid(args.grid)
    plan_ = planner.plan(
        grid,
        args.probes,
        args.baseline,
        catalog=catalog,
        calibrate_inputs=args.calibrate_inputs,
        param_scaling=_parse_scaling(args.param_scaling),
    )
    print(planner.format_plan_summary(plan_))
    return EXIT_OK


def cmd_fit(args) -> int:
    path = _dataset_path(args)
    data = _load_dataset(path)
    param, value = _parse_input(args.input)
    input_ = ds.AppInput(_resolve_app(data, args.app), param, value)
    source_procs = args.procs or _infer_procs(data, args.source, input_)
    source = ds.extract_curve(
        data, args.source, input_, source_procs, ("measured", "simulated")
    )
    target_procs = args.procs or _infer_procs(data, args.target, input_)
    target_records = data.match(
        input=input_, sku_name=args.target, procs_per_vm=target_procs,
        provenances=("measured", "simulated"),
    )
    if not target_records:
        raise NoDataError(
            f"no executed data for target SKU '{args.target}' at {input_.describe()}"
        )
    targets = [(r.scenario.n_vms, r.exec_time_s) for r in target_records]
    fit = predictor.fit_scaling_factor(source, targets)
    print(f"source: {args.source} nodes={list(source.nodes())}")
    print(f"target: {args.target} probes={[n for n, _ in targets]}")
    print(f"factor: {fit.factor:.6f}")
    print(f"residual: {fit.residual:.6g}")
    print(f"iterations: {fit.iterations}")
    print(f"converged: {'yes' if fit.converged else 'no'}")
    return EXIT_OK


def cmd_predict(args) -> int:
    catalog = _require_catalog(args)
    path = _dataset_path(args)
    data = _load_dataset(path)
    plan_ = _grid_plan(args, catalog)
    probe = data.match(
        input=plan_.base_input, sku_name=plan_.baseline_sku,
        provenances=("measured", "simulated"),
    )
    if not probe:
        raise NoDataError(
            f"no executed records for baseline SKU '{plan_.baseline_sku}' at "
            f"{plan_.base_input.describe()}; run simulate first"
        )
    records, fits = planner.derive_predictions(
        plan_,
        data,
        param_scaling=_parse_scaling(args.param_scaling),
        stamp=_seed_stamp(args.seed),
    )
    for sku in sorted(fits):
        fit = fits[sku]
        print(
            f"fit {sku}: factor {fit.factor:.6f} residual {fit.residual:.3g} "
            f"converged {'yes' if fit.converged else 'no'}"
        )
    data = data.merge(records)
    ds.save_dataset(data, path)
    n_cross_vm = sum(1 for r in records if r.method == predictor.CROSS_VM)
    print(
        f"wrote {len(records)} predicted records "
        f"({n_cross_vm} cross-vm, {len(records) - n_cross_vm} cross-input) -> {path}"
    )
    return EXIT_OK


def cmd_advise(args) -> int:
    catalog = _require_catalog(args)
    data = _load_dataset(_dataset_path(args))
    input_ = _resolve_input(args, data)
    result = advisor.recommend(data, catalog, input_, billing=args.billing)
    print(f"pareto front for {input_.describe()} (billing: {args.billing})")
    header = f"{'':2} {'sku':>10} {'n_vms':>6} {'procs':>6} {'time_s':>12} {'cost_usd':>12} {'provenance':>11}"
    print(header)
    for point in result.front:
        s = point.scenario
        print(
            f"{'*':2} {s.sku_name:>10} {s.n_vms:>6} {s.procs_per_vm:>6} "
            f"{point.exec_time_s:>12.2f} {point.cost:>12.4f} {point.provenance:>11}"
        )
    print(f"front: {len(result.front)} of {len(result.front) + len(result.dominated)} candidates")
    for name, point in advisor.annotations(result).items():
        s = point.scenario
        print(
            f"{name}: {s.sku_name} n_vms={s.n_vms} "
            f"time={point.exec_time_s:.2f}s cost=${point.cost:.4f}"
        )
    out = _out_dir(args)
    table_path = report.emit_table(result, out / "pareto.csv")
    plot_path = report.emit_plot(
        report.pareto_plot(result, title=f"time/cost trade-off: {input_.describe()}"),
        out / "pareto.svg",
    )
    print(f"wrote {table_path} and {plot_path}")
    return EXIT_OK


def cmd_report(args) -> int:
    catalog = _require_catalog(args)
    data = _load_dataset(_dataset_path(args))
    input_ = _resolve_input(args, data)
    out = _out_dir(args)
    if args.kind == "pareto":
        result = advisor.recommend(data, catalog, input_, billing=args.billing)
        spec = report.pareto_plot(
            result, title=f"time/cost trade-off: {input_.describe()}"
        )
        table_path = report.emit_table(result, out / "pareto.csv")
    else:
        records = data.match(input=input_)
        if not records:
            raise NoDataError(f"no benchmark records for {input_.describe()}")
        spec = report.scaling_plot(
            data, input_, kind=args.kind, catalog=catalog,
            billing=args.billing, x_log2=args.log2_x,
        )
        table_path = report.emit_table(
            records, out / f"{args.kind}.csv", catalog=catalog, billing=args.billing
        )
    plot_path = report.emit_plot(spec, out / f"{args.kind}.svg")
    print(f"wrote {table_path} and {plot_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_common(parser: argparse.ArgumentParser, *, dataset: bool = True) -> None:
    parser.add_argument(
        "--config", help="JSON config file; values in it override flags"
    )
    parser.add_argument(
        "--out", help=f"output directory (default: ${HOME_ENV} or current directory)"
    )
    if dataset:
        parser.add_argument(
            "--dataset", help="dataset file (default: <out>/dataset.jsonl)"
        )


def build_parser() -> _Parser:
    parser = _Parser(
        prog="hpcadvisor",
        description=(
            "Predict execution-time curves across VM types and input sizes from "
            "sparse benchmark data, cost each configuration, and recommend "
            "Pareto-optimal choices."
        ),
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("ingest", help="merge benchmark record files into the dataset")
    p.add_argument("files", nargs="+", help="record files (one JSON object per line)")
    _add_common(p)
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("simulate", help="execute grid scenarios through a backend")
    p.add_argument("--grid", required=True, help="grid definition file (JSON)")
    p.add_argument("--catalog", required=True, help="VM catalog file")
    p.add_argument(
        "--backend", choices=("simulate", "replay", "cloud-stub"), default="simulate",
        help="execution backend (default: simulate)",
    )
    p.add_argument("--model", help="synthetic model file (simulate backend)")
    p.add_argument("--replay-dataset", help="fixture dataset file (replay backend)")
    p.add_argument(
        "--probes", type=int, choices=(0, 1, 2), default=0,
        help="0 runs the full grid; 1 or 2 runs only the plan's executed subset",
    )
    p.add_argument("--baseline", help="baseline SKU (default: lexicographically first)")
    p.add_argument("--calibrate-inputs", action="store_true",
                   help="also execute one baseline run per extra input value")
    p.add_argument("--param-scaling", action="append", metavar="NAME=POLICY",
                   help="input scaling policy, linear or none (default linear)")
    p.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    p.add_argument("--parallel", type=int, default=1, help="concurrent executions")
    _add_common(p)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("plan", help="show the scenario-reduction plan for a grid")
    p.add_argument("--grid", required=True, help="grid definition file (JSON)")
    p.add_argument("--probes", type=int, choices=(1, 2), default=2,
                   help="probe runs per non-baseline SKU")
    p.add_argument("--baseline", help="baseline SKU (default: lexicographically first)")
    p.add_argument("--catalog", help="VM catalog file (needed for all-cores grids)")
    p.add_argument("--calibrate-inputs", action="store_true",
                   help="include one baseline run per extra input value")
    p.add_argument("--param-scaling", action="append", metavar="NAME=POLICY")
    _add_common(p, dataset=False)
    p.set_defaults(handler=cmd_plan)

    p = sub.add_parser("fit", help="fit the scaling factor between two SKUs")
    p.add_argument("--source", required=True, help="source SKU name")
    p.add_argument("--target", required=True, help="target SKU name")
    p.add_argument("--input", required=True, metavar="NAME=VALUE",
                   help="application input, e.g. cells=1e6")
    p.add_argument("--app", help="application name (default: inferred from dataset)")
    p.add_argument("--procs", type=int, help="procs per VM filter (default: inferred)")
    _add_common(p)
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("predict", help="derive predicted records for a grid plan")
    p.add_argument("--grid", required=True, help="grid definition file (JSON)")
    p.add_argument("--catalog", required=True, help="VM catalog file")
    p.add_argument("--probes", type=int, choices=(1, 2), default=2,
                   help="probe runs per non-baseline SKU the plan assumes")
    p.add_argument("--baseline", help="baseline SKU (default: lexicographically first)")
    p.add_argument("--calibrate-inputs", action="store_true")
    p.add_argument("--param-scaling", action="append", metavar="NAME=POLICY")
    p.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    _add_common(p)
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("advise", help="print the Pareto recommendation for an input")
    p.add_argument("--input", required=True, metavar="NAME=VALUE",
                   help="application input, e.g. cells=1e6")
    p.add_argument("--app", help="application name (default: inferred from dataset)")
    p.add_argument("--catalog", required=True, help="VM catalog file")
    p.add_argument("--billing", choices=advisor.BILLING_MODES, default="per-minute",
                   help="cost model granularity")
    _add_common(p)
    p.set_defaults(handler=cmd_advise)

    p = sub.add_parser("report", help="write a table and plot for one view")
    p.add_argument("--kind", required=True, choices=report.PLOT_KINDS,
                   help="which view to render")
    p.add_argument("--input", required=True, metavar="NAME=VALUE",
                   help="application input, e.g. cells=1e6")
    p.add_argument("--app", help="application name (default: inferred from dataset)")
    p.add_argument("--catalog", required=True, help="VM catalog file")
    p.add_argument("--billing", choices=advisor.BILLING_MODES, default="per-minute",
                   help="cost model granularity")
    p.add_argument("--log2-x", action="store_true", help="log2 x-axis for node counts")
    _add_common(p)
    p.set_defaults(handler=cmd_report)

    return parser


# every option any subcommand accepts; one config file can serve the whole
# pipeline, each stage applying the keys it understands
_CONFIG_KEYS = frozenset({
    "app", "backend", "baseline", "billing", "calibrate_inputs", "catalog",
    "dataset", "grid", "input", "kind", "log2_x", "model", "out", "parallel",
    "param_scaling", "probes", "procs", "replay_dataset", "seed", "source",
    "target",
})


def _apply_config(args: argparse.Namespace) -> None:
    """Overlay values from --config; the config file wins over flags."""
    if not getattr(args, "config", None):
        return
    path = Path(args.config)
    if not path.exists():
        raise UserError(f"config file not found: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UserError(f"config file {path}: invalid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise UserError(f"config file {path} must hold a JSON object")
    unknown = [key for key in obj if key.replace("-", "_") not in _CONFIG_KEYS]
    if unknown:
        raise UserError(f"config file {path}: unknown keys: {', '.join(sorted(unknown))}")
    for key, value in obj.items():
        dest = key.replace("-", "_")
        if hasattr(args, dest):
            setattr(args, dest, value)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help exits 0, usage errors exit 1
        return int(exc.code or 0)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return EXIT_USER
    try:
        _apply_config(args)
        return args.handler(args)
    except UserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except AdvisorError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()

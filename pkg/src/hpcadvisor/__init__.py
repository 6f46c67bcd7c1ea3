"""Predict HPC execution-time curves across cloud VM types, cost each
configuration, and recommend Pareto-optimal (time, cost) choices while
planning the minimal set of benchmark runs to actually execute."""

from .advisor import (
    BILLING_MODES,
    CostedPoint,
    ParetoResult,
    annotations,
    compute_cost,
    pareto_front,
    recommend,
)
from .dataset import (
    AppInput,
    BenchmarkRecord,
    Dataset,
    IngestResult,
    PROVENANCES,
    ScalingCurve,
    Scenario,
    VmCatalog,
    VmSku,
    extract_curve,
    ingest_records,
    load_catalog,
    load_dataset,
    save_dataset,
    scenario_key,
)
from .errors import (
    AdvisorError,
    BackendError,
    DivergedError,
    InternalError,
    NoDataError,
    OutOfRangeError,
    ParseError,
    PlannerError,
    PlanningError,
    UserError,
    ValidationError,
)
from .executor import (
    CloudStubBackend,
    ExecutionOutcome,
    ReplayBackend,
    SimulatorBackend,
    SkuPerf,
    SyntheticModel,
    load_model,
    simulate,
)
from .optimizer import OptimizeResult, OptimizerConfig, minimize
from .planner import (
    PlanExecution,
    PredictionReport,
    ScenarioGrid,
    ScenarioPlan,
    derive_predictions,
    evaluate,
    execute_plan,
    format_plan_summary,
    load_grid,
    plan,
    run_scenarios,
)
from .predictor import (
    CROSS_INPUT,
    CROSS_VM,
    ScalingFit,
    fit_scaling_factor,
    interpolate,
    predict_cross_input,
    predict_cross_vm,
)
from .report import (
    PLOT_KINDS,
    PlotSeries,
    PlotSpec,
    emit_plot,
    emit_table,
    pareto_plot,
    render_svg,
    scaling_plot,
)

__version__ = "0.1.0"

__all__ = [
    "AdvisorError", "AppInput", "BackendError", "BenchmarkRecord",
    "BILLING_MODES", "CloudStubBackend", "CostedPoint", "CROSS_INPUT",
    "CROSS_VM", "Dataset", "DivergedError", "ExecutionOutcome",
    "IngestResult", "InternalError", "NoDataError", "OptimizeResult",
    "OptimizerConfig", "OutOfRangeError", "ParetoResult", "ParseError",
    "PlanExecution", "PlannerError", "PlanningError", "PLOT_KINDS",
    "PlotSeries", "PlotSpec", "PredictionReport", "PROVENANCES",
    "ReplayBackend", "ScalingCurve", "ScalingFit", "ScenarioGrid",
    "ScenarioPlan", "Scenario", "SimulatorBackend", "SkuPerf",
    "SyntheticModel", "UserError", "ValidationError", "VmCatalog", "VmSku",
    "annotations", "compute_cost", "derive_predictions", "emit_plot",
    "emit_table", "evaluate", "execute_plan", "extract_curve",
    "fit_scaling_factor", "format_plan_summary", "ingest_records",
    "interpolate", "load_catalog", "load_dataset", "load_grid",
    "load_model", "minimize", "pareto_front", "pareto_plot", "plan",
    "predict_cross_input", "predict_cross_vm", "recommend", "render_svg",
    "run_scenarios", "save_dataset", "scaling_plot", "scenario_key",
    "simulate",
]

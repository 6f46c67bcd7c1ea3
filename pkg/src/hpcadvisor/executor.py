"""Scenario execution backends.

Includes a deterministic synthetic-performance simulator, a replay backend
that serves times from a fixture dataset, and a declared stub for the real
cloud path. Backends implement ``run(scenario, catalog) -> ExecutionOutcome``
and never raise into the pipeline: failures come back as outcomes.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from .dataset import (
    Dataset,
    PROVENANCES,
    Scenario,
    VmCatalog,
    check_against_catalog,
    scenario_key,
)
from .errors import AdvisorError, BackendError, ParseError, UserError, ValidationError


@dataclass(frozen=True)
class SkuPerf:
    """Synthetic performance parameters for one SKU.

    ``parallel_work_s`` is the parallelizable work at the model's reference
    input size; it shrinks with ``cores**alpha``. When the per-VM share of
    the input drops under ``cache_threshold`` the parallel term is divided
    by ``cache_speedup``, producing a super-linear regime.
    """

    serial_time_s: float
    parallel_work_s: float
    alpha: float = 1.0
    comm_coeff_s: float = 0.0
    cache_threshold: float | None = None
    cache_speedup: float = 1.0

    def __post_init__(self):
        if self.serial_time_s < 0:
            raise ValidationError("serial_time_s must be >= 0")
        if self.parallel_work_s <= 0:
            raise ValidationError("parallel_work_s must be positive")
        if not 0.0 < self.alpha <= 1.0:
            raise ValidationError("alpha must lie in (0, 1]")
        if self.comm_coeff_s < 0:
            raise ValidationError("comm_coeff_s must be >= 0")
        if self.cache_speedup < 1.0:
            raise ValidationError("cache_speedup must be >= 1")
        if self.cache_threshold is not None and self.cache_threshold <= 0:
            raise ValidationError("cache_threshold must be positive when set")


@dataclass(frozen=True)
class SyntheticModel:
    """Per-SKU synthetic model plus global noise and reference input size."""

    reference_value: float
    skus: Mapping[str, SkuPerf] = field(default_factory=dict)
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.reference_value <= 0:
            raise ValidationError("reference_value must be positive")
        if self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be >= 0")
        if not self.skus:
            raise ValidationError("model must define at least one SKU")

    def with_seed(self, seed: int) -> "SyntheticModel":
        return replace(self, seed=int(seed))


def _noise_factor(model: SyntheticModel, scenario: Scenario) -> float:
    # noise is keyed by (seed, scenario), not call order, so results are
    # reproducible under any execution order or parallelism
    if model.noise_sigma == 0.0:
        return 1.0
    key = "|".join(
        [str(model.seed)] + [repr(part) for part in scenario_key(scenario)]
    )
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
    z = float(rng.standard_normal())
    return math.exp(model.noise_sigma * z)


def simulate(model: SyntheticModel, scenario: Scenario, catalog: VmCatalog) -> float:
    """Deterministic synthetic execution time for one scenario."""
    perf = model.skus.get(scenario.sku_name)
    if perf is None:
        raise BackendError(f"SKU '{scenario.sku_name}' is not defined in the synthetic model")
    check_against_catalog(scenario, catalog)
    cores = scenario.n_vms * scenario.procs_per_vm
    parallel = perf.parallel_work_s / cores**perf.alpha
    if (
        perf.cache_threshold is not None
        and scenario.input.value / scenario.n_vms < perf.cache_threshold
    ):
        parallel /= perf.cache_speedup
    scale = scenario.input.value / model.reference_value
    base = scale * (perf.serial_time_s + parallel) + perf.comm_coeff_s * math.log2(
        max(scenario.n_vms, 2)
    )
    return base * _noise_factor(model, scenario)


@dataclass(frozen=True)
class ExecutionOutcome:
    scenario: Scenario
    exec_time_s: float | None
    status: str  # "ok" | "failed"
    detail: str = ""

    def __post_init__(self):
        if self.status not in ("ok", "failed"):
            raise ValidationError("status must be 'ok' or 'failed'")
        if self.status == "ok" and (self.exec_time_s is None or self.exec_time_s <= 0):
            raise ValidationError("an ok outcome needs a positive exec_time_s")


class SimulatorBackend:
    """Runs scenarios against a synthetic performance model."""

    provenance = "simulated"

    def __init__(self, model: SyntheticModel):
        self.model = model

    def run(self, scenario: Scenario, catalog: VmCatalog) -> ExecutionOutcome:
        try:
            t = simulate(self.model, scenario, catalog)
        except AdvisorError as exc:
            return ExecutionOutcome(scenario, None, "failed", str(exc))
        return ExecutionOutcome(scenario, t, "ok")


class ReplayBackend:
    """Serves execution times recorded in a fixture dataset."""

    def __init__(self, dataset: Dataset, provenance: str = "measured"):
        if provenance not in PROVENANCES:
            raise ValidationError(f"provenance must be one of {PROVENANCES}")
        self.dataset = dataset
        self.provenance = provenance

    def run(self, scenario: Scenario, catalog: VmCatalog) -> ExecutionOutcome:
        record = self.dataset.get(scenario, self.provenance)
        if record is None:
            return ExecutionOutcome(
                scenario, None, "failed", "scenario not present in replay dataset"
            )
        return ExecutionOutcome(scenario, record.exec_time_s, "ok")


class CloudStubBackend:
    """Declared placeholder for the managed-cloud execution path."""

    provenance = "measured"

    def run(self, scenario: Scenario, catalog: VmCatalog) -> ExecutionOutcome:
        return ExecutionOutcome(scenario, None, "failed", "backend not built")


_SKU_FIELDS = {
    "serial_time_s": "serial_time_s",
    "parallel_work_s": "parallel_work_s",
    "alpha": "alpha",
    "comm_coeff_s": "comm_coeff_s",
    "cache_threshold": "cache_threshold",
    "cache_speedup": "cache_speedup",
}


def load_model(path: str | Path) -> SyntheticModel:
    """Read a synthetic model file (one JSON object per line).

    Lines carrying ``sku_name`` define per-SKU parameters; the remaining
    lines set globals (``reference_value``, ``noise_sigma``, ``seed``).
    """
    path = Path(path)
    if not path.exists():
        raise UserError(f"file not found: {path}")
    globals_: dict = {}
    skus: dict[str, SkuPerf] = {}
    text = path.read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(path, lineno, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(obj, dict):
            raise ParseError(path, lineno, "each line must be a JSON object")
        if "sku_name" in obj:
            name = str(obj["sku_name"])
            kwargs = {dst: obj[src] for src, dst in _SKU_FIELDS.items() if src in obj}
            try:
                skus[name] = SkuPerf(**kwargs)
            except (TypeError, ValidationError) as exc:
                raise ParseError(path, lineno, f"SKU '{name}': {exc}") from exc
        else:
            globals_.update(obj)
    if "reference_value" not in globals_:
        raise ParseError(path, 0, "model file must define reference_value")
    try:
        return SyntheticModel(
            reference_value=float(globals_["reference_value"]),
            skus=skus,
            noise_sigma=float(globals_.get("noise_sigma", 0.0)),
            seed=int(globals_.get("seed", 0)),
        )
    except ValidationError as exc:
        raise ParseError(path, 0, str(exc)) from exc

"""Domain types, validation, and JSON-lines persistence for benchmark data.

A dataset is a flat collection of benchmark records keyed by
(scenario, provenance). Re-ingesting an existing key replaces the earlier
record, so freshly re-run scenarios win. Catalogs list the selectable VM
SKUs. Both files use one JSON object per line; unknown fields are ignored
so the field names are the interface, not the object shape.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import NoDataError, ParseError, UserError, ValidationError

PROVENANCES = ("measured", "simulated", "predicted")

# authority order used when several provenances cover the same node count
_PROVENANCE_RANK = {name: rank for rank, name in enumerate(PROVENANCES)}

EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class VmSku:
    """A selectable VM type: name, per-VM core count, and hourly price."""

    name: str
    cores_per_vm: int
    price_per_hour: float
    family: str = ""

    def __post_init__(self):
        if not self.name:
            raise ValidationError("SKU name must be non-empty")
        if not isinstance(self.cores_per_vm, int) or self.cores_per_vm < 1:
            raise ValidationError(f"SKU '{self.name}': cores_per_vm must be a positive integer")
        if self.price_per_hour <= 0:
            raise ValidationError(f"SKU '{self.name}': price_per_hour must be positive")


@dataclass(frozen=True)
class AppInput:
    """An application input parameter with direct impact on run time."""

    app_name: str
    param_name: str
    value: float

    def __post_init__(self):
        if not self.app_name or not self.param_name:
            raise ValidationError("app_name and param_name must be non-empty")
        object.__setattr__(self, "value", float(self.value))
        if self.value <= 0:
            raise ValidationError(f"input {self.param_name} must be positive, got {self.value}")

    def describe(self) -> str:
        return f"{self.app_name} {self.param_name}={self.value:g}"


@dataclass(frozen=True)
class Scenario:
    """One candidate configuration: SKU, VM count, processes per VM, input."""

    sku_name: str
    n_vms: int
    procs_per_vm: int
    input: AppInput

    def __post_init__(self):
        if not self.sku_name:
            raise ValidationError("scenario requires a SKU name")
        if self.n_vms < 1:
            raise ValidationError("n_vms must be >= 1")
        if self.procs_per_vm < 1:
            raise ValidationError("procs_per_vm must be >= 1")

    def describe(self) -> str:
        return (
            f"{self.input.describe()} on {self.n_vms}x{self.sku_name}"
            f" ({self.procs_per_vm} procs/VM)"
        )


def scenario_key(scenario: Scenario) -> tuple:
    """Canonical sort/identity key for a scenario."""
    return (
        scenario.input.app_name,
        scenario.input.param_name,
        scenario.input.value,
        scenario.sku_name,
        scenario.n_vms,
        scenario.procs_per_vm,
    )


def check_against_catalog(scenario: Scenario, catalog: "VmCatalog") -> VmSku:
    """Resolve the scenario's SKU and enforce procs_per_vm <= cores_per_vm."""
    sku = catalog.get(scenario.sku_name)
    if sku is None:
        raise ValidationError(f"unknown SKU '{scenario.sku_name}'")
    if scenario.procs_per_vm > sku.cores_per_vm:
        raise ValidationError(
            f"scenario requests {scenario.procs_per_vm} procs/VM but SKU "
            f"'{sku.name}' has {sku.cores_per_vm} cores"
        )
    return sku


@dataclass(frozen=True)
class BenchmarkRecord:
    """An execution time for one scenario, tagged with how it was obtained.

    ``method`` is present exactly when provenance is "predicted" (values
    "cross-vm" or "cross-input"); measured and simulated records carry none.
    """

    scenario: Scenario
    exec_time_s: float
    provenance: str
    method: str | None = None
    timestamp: datetime = EPOCH

    def __post_init__(self):
        if self.exec_time_s <= 0:
            raise ValidationError(f"exec_time_s must be positive, got {self.exec_time_s}")
        if self.provenance not in PROVENANCES:
            raise ValidationError(
                f"provenance must be one of {PROVENANCES}, got '{self.provenance}'"
            )
        if (self.provenance == "predicted") != (self.method is not None):
            raise ValidationError(
                "method must be present exactly when provenance is 'predicted'"
            )
        if self.timestamp.tzinfo is None:
            object.__setattr__(self, "timestamp", self.timestamp.replace(tzinfo=timezone.utc))

    @property
    def key(self) -> tuple:
        return (scenario_key(self.scenario), self.provenance)


def record_sort_key(record: BenchmarkRecord) -> tuple:
    return (scenario_key(record.scenario), record.provenance)


@dataclass(frozen=True)
class ScalingCurve:
    """Execution time versus number of VMs, all else fixed."""

    sku_name: str
    input: AppInput
    procs_per_vm: int
    points: tuple[tuple[int, float], ...]

    def __post_init__(self):
        points = tuple((int(n), float(t)) for n, t in self.points)
        object.__setattr__(self, "points", points)
        if not points:
            raise ValidationError("a scaling curve needs at least one point")
        nodes = [n for n, _ in points]
        if any(b <= a for a, b in zip(nodes, nodes[1:])):
            raise ValidationError("curve node counts must be strictly increasing")
        if nodes[0] < 1:
            raise ValidationError("curve node counts must be >= 1")
        if any(t <= 0 for _, t in points):
            raise ValidationError("curve times must be positive")

    def nodes(self) -> tuple[int, ...]:
        return tuple(n for n, _ in self.points)

    def times(self) -> tuple[float, ...]:
        return tuple(t for _, t in self.points)

    @property
    def min_node(self) -> int:
        return self.points[0][0]

    @property
    def max_node(self) -> int:
        return self.points[-1][0]


class VmCatalog:
    """Immutable, name-indexed collection of VM SKUs."""

    def __init__(self, skus: Iterable[VmSku] = ()):
        skus = tuple(skus)
        by_name: dict[str, VmSku] = {}
        for sku in skus:
            if sku.name in by_name:
                raise ValidationError(f"duplicate SKU name '{sku.name}'")
            by_name[sku.name] = sku
        self._skus = skus
        self._by_name = by_name

    @property
    def skus(self) -> tuple[VmSku, ...]:
        return self._skus

    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self._skus)

    def get(self, name: str) -> VmSku | None:
        return self._by_name.get(name)

    def __getitem__(self, name: str) -> VmSku:
        sku = self._by_name.get(name)
        if sku is None:
            raise ValidationError(f"unknown SKU '{name}'")
        return sku

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __len__(self) -> int:
        return len(self._skus)

    def __iter__(self) -> Iterator[VmSku]:
        return iter(self._skus)


class Dataset:
    """Immutable record collection with one record per (scenario, provenance).

    Construction applies the replacement rule: when the same key appears
    more than once, the record seen last wins.
    """

    def __init__(self, records: Iterable[BenchmarkRecord] = ()):
        by_key: dict[tuple, BenchmarkRecord] = {}
        for record in records:
            by_key[record.key] = record
        self._by_key = by_key

    @property
    def records(self) -> tuple[BenchmarkRecord, ...]:
        """All records in canonical order (scenario key, then provenance)."""
        return tuple(sorted(self._by_key.values(), key=record_sort_key))

    def __len__(self) -> int:
        return len(self._by_key)

    def __iter__(self) -> Iterator[BenchmarkRecord]:
        return iter(self.records)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.records == other.records

    def get(self, scenario: Scenario, provenance: str) -> BenchmarkRecord | None:
        return self._by_key.get((scenario_key(scenario), provenance))

    def lookup(
        self, scenario: Scenario, provenances: Sequence[str] = PROVENANCES
    ) -> BenchmarkRecord | None:
        """Most authoritative record for a scenario among the given provenances."""
        for provenance in sorted(provenances, key=_PROVENANCE_RANK.__getitem__):
            record = self.get(scenario, provenance)
            if record is not None:
                return record
        return None

    def merge(self, records: Iterable[BenchmarkRecord]) -> "Dataset":
        return Dataset(tuple(self._by_key.values()) + tuple(records))

    def match(
        self,
        *,
        input: AppInput | None = None,
        sku_name: str | None = None,
        procs_per_vm: int | None = None,
        provenances: Sequence[str] | None = None,
    ) -> tuple[BenchmarkRecord, ...]:
        out = []
        for record in self.records:
            s = record.scenario
            if input is not None and s.input != input:
                continue
            if sku_name is not None and s.sku_name != sku_name:
                continue
            if procs_per_vm is not None and s.procs_per_vm != procs_per_vm:
                continue
            if provenances is not None and record.provenance not in provenances:
                continue
            out.append(record)
        return tuple(out)

    def app_names(self) -> tuple[str, ...]:
        return tuple(sorted({r.scenario.input.app_name for r in self._by_key.values()}))

    def inputs(self) -> tuple[AppInput, ...]:
        seen = {r.scenario.input for r in self._by_key.values()}
        return tuple(sorted(seen, key=lambda i: (i.app_name, i.param_name, i.value)))


@dataclass(frozen=True)
class IngestResult:
    """Outcome of ingesting one file: merged dataset plus a reject summary."""

    dataset: Dataset
    added: int
    replaced: int
    rejected: tuple[tuple[int, str], ...]  # (1-based line number, reason)


def extract_curve(
    dataset: Dataset,
    sku_name: str,
    input: AppInput,
    procs_per_vm: int,
    provenances: Sequence[str] | None = None,
) -> ScalingCurve:
    """Build the scaling curve for one (SKU, input, procs) slice of a dataset.

    When the filter admits several provenances for the same node count, the
    most authoritative wins: measured, then simulated, then predicted.
    """
    allowed = tuple(provenances) if provenances is not None else PROVENANCES
    for p in allowed:
        if p not in PROVENANCES:
            raise ValidationError(f"unknown provenance '{p}'")
    best: dict[int, BenchmarkRecord] = {}
    for record in dataset.match(
        input=input, sku_name=sku_name, procs_per_vm=procs_per_vm, provenances=allowed
    ):
        n = record.scenario.n_vms
        current = best.get(n)
        if current is None or _PROVENANCE_RANK[record.provenance] < _PROVENANCE_RANK[current.provenance]:
            best[n] = record
    if not best:
        raise NoDataError(
            f"no records for SKU '{sku_name}' at {input.describe()}"
            f" with {procs_per_vm} procs/VM (provenances: {', '.join(allowed)})"
        )
    points = tuple(sorted((n, r.exec_time_s) for n, r in best.items()))
    return ScalingCurve(sku_name=sku_name, input=input, procs_per_vm=procs_per_vm, points=points)


# ---------------------------------------------------------------------------
# serialization


def _as_int(obj: dict, field: str) -> int:
    value = obj[field]
    if isinstance(value, bool):
        raise ValidationError(f"field '{field}' must be an integer")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    raise ValidationError(f"field '{field}' must be an integer, got {value!r}")


def _as_float(obj: dict, field: str) -> float:
    value = obj[field]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"field '{field}' must be a number, got {value!r}")
    return float(value)


def _parse_timestamp(value: object) -> datetime:
    if value is None:
        return EPOCH
    if not isinstance(value, str):
        raise ValidationError(f"timestamp must be an ISO-8601 string, got {value!r}")
    try:
        stamp = datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError as exc:
        raise ValidationError(f"bad timestamp {value!r}: {exc}") from exc
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp


_RECORD_FIELDS = (
    "app_name", "param_name", "param_value", "sku_name",
    "n_vms", "procs_per_vm", "exec_time_s", "provenance",
)


def record_from_dict(obj: dict) -> BenchmarkRecord:
    for field in _RECORD_FIELDS:
        if field not in obj:
            raise ValidationError(f"missing field '{field}'")
    scenario = Scenario(
        sku_name=str(obj["sku_name"]),
        n_vms=_as_int(obj, "n_vms"),
        procs_per_vm=_as_int(obj, "procs_per_vm"),
        input=AppInput(
            app_name=str(obj["app_name"]),
            param_name=str(obj["param_name"]),
            value=_as_float(obj, "param_value"),
        ),
    )
    method = obj.get("method")
    if method is not None:
        method = str(method)
    return BenchmarkRecord(
        scenario=scenario,
        exec_time_s=_as_float(obj, "exec_time_s"),
        provenance=str(obj["provenance"]),
        method=method,
        timestamp=_parse_timestamp(obj.get("timestamp")),
    )


def record_to_dict(record: BenchmarkRecord) -> dict:
    scenario = record.scenario
    obj = {
        "app_name": scenario.input.app_name,
        "param_name": scenario.input.param_name,
        "param_value": scenario.input.value,
        "sku_name": scenario.sku_name,
        "n_vms": scenario.n_vms,
        "procs_per_vm": scenario.procs_per_vm,
        "exec_time_s": record.exec_time_s,
        "provenance": record.provenance,
    }
    if record.method is not None:
        obj["method"] = record.method
    obj["timestamp"] = record.timestamp.isoformat()
    return obj


def _iter_json_lines(path: Path) -> Iterator[tuple[int, dict]]:
    if not path.exists():
        raise UserError(f"file not found: {path}")
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
        yield lineno, obj


def load_catalog(path: str | Path) -> VmCatalog:
    """Read a VM catalog file (one JSON object per line).

    Catalog problems are fatal: a bad line, duplicate name, or invalid
    price/core count raises rather than skipping.
    """
    path = Path(path)
    skus = []
    for lineno, obj in _iter_json_lines(path):
        try:
            skus.append(
                VmSku(
                    name=str(obj.get("name", "")),
                    cores_per_vm=_as_int(obj, "cores_per_vm") if "cores_per_vm" in obj else 0,
                    price_per_hour=_as_float(obj, "price_per_hour") if "price_per_hour" in obj else 0.0,
                    family=str(obj.get("family", "")),
                )
            )
        except ValidationError as exc:
            raise ParseError(path, lineno, str(exc)) from exc
    try:
        return VmCatalog(skus)
    except ValidationError as exc:
        raise ParseError(path, 0, str(exc)) from exc


def ingest_records(path: str | Path, dataset: Dataset) -> IngestResult:
    """Merge a record file into a dataset.

    Malformed JSON aborts with a :class:`ParseError` naming the line.
    Records violating an invariant are rejected individually; the rest are
    still ingested and the rejects come back with their line numbers.
    """
    path = Path(path)
    accepted: list[BenchmarkRecord] = []
    rejected: list[tuple[int, str]] = []
    for lineno, obj in _iter_json_lines(path):
        try:
            accepted.append(record_from_dict(obj))
        except ValidationError as exc:
            rejected.append((lineno, str(exc)))
    existing = {r.key for r in dataset.records}
    seen: set[tuple] = set()
    added = replaced = 0
    for record in accepted:
        if record.key in existing or record.key in seen:
            replaced += 1
        else:
            added += 1
            seen.add(record.key)
    merged = dataset.merge(accepted)
    return IngestResult(dataset=merged, added=added, replaced=replaced, rejected=tuple(rejected))


def load_dataset(path: str | Path) -> Dataset:
    """Strict load: any invalid record raises (used for pipeline-owned files)."""
    path = Path(path)
    records = []
    for lineno, obj in _iter_json_lines(path):
        try:
            records.append(record_from_dict(obj))
        except ValidationError as exc:
            raise ParseError(path, lineno, str(exc)) from exc
    return Dataset(records)


def save_dataset(dataset: Dataset, path: str | Path) -> Path:
    """Write the dataset in canonical order, atomically replacing the file."""
    path = Path(path)
    lines = [json.dumps(record_to_dict(r)) for r in dataset.records]
    body = "".join(line + "\n" for line in lines)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(body, encoding="utf-8")
    os.replace(tmp, path)
    return path

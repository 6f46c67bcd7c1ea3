"""Cost modeling and Pareto-front recommendation over candidate configurations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .dataset import (
    AppInput,
    Dataset,
    PROVENANCES,
    Scenario,
    VmCatalog,
    VmSku,
    check_against_catalog,
    scenario_key,
)
from .errors import NoDataError, ValidationError

BILLING_MODES = ("per-minute", "exact")


@dataclass(frozen=True)
class CostedPoint:
    """A configuration with its execution time and monetary cost."""

    scenario: Scenario
    exec_time_s: float
    cost: float
    provenance: str

    def __post_init__(self):
        if self.exec_time_s <= 0:
            raise ValidationError("exec_time_s must be positive")
        if self.cost <= 0:
            raise ValidationError("cost must be positive")
        if self.provenance not in PROVENANCES:
            raise ValidationError(f"provenance must be one of {PROVENANCES}")


@dataclass(frozen=True)
class ParetoResult:
    """Non-dominated front (time ascending, cost descending) plus the rest."""

    front: tuple[CostedPoint, ...]
    dominated: tuple[CostedPoint, ...]

    def __post_init__(self):
        for a, b in zip(self.front, self.front[1:]):
            if not (a.exec_time_s < b.exec_time_s and a.cost > b.cost):
                raise ValidationError(
                    "front must be strictly increasing in time and decreasing in cost"
                )


def compute_cost(
    exec_time_s: float, n_vms: int, sku: VmSku, *, billing: str = "per-minute"
) -> float:
    """Money spent running ``n_vms`` VMs of ``sku`` for ``exec_time_s``.

    The default per-minute mode rounds the runtime up to whole minutes
    first, matching cloud billing granularity; "exact" charges the raw
    duration.
    """
    if exec_time_s <= 0:
        raise ValidationError("exec_time_s must be positive")
    if n_vms < 1:
        raise ValidationError("n_vms must be >= 1")
    if billing not in BILLING_MODES:
        raise ValidationError(f"billing must be one of {BILLING_MODES}, got '{billing}'")
    if billing == "per-minute":
        billed_s = math.ceil(exec_time_s / 60.0) * 60.0
    else:
        billed_s = exec_time_s
    return billed_s / 3600.0 * n_vms * sku.price_per_hour


def _candidate_order(point: CostedPoint) -> tuple:
    return (point.exec_time_s, point.cost, scenario_key(point.scenario), point.provenance)


def pareto_front(points: Sequence[CostedPoint]) -> ParetoResult:
    """Split points into the Pareto front (minimizing time and cost) and the rest.

    A point is on the front iff no other point is at least as good in both
    objectives and strictly better in one. Exact (time, cost) duplicates
    keep only the first in canonical scenario-key order; the others are
    classified dominated.
    """
    if not points:
        raise ValidationError("cannot compute a Pareto front from zero points")
    ranked = sorted(points, key=_candidate_order)
    front: list[CostedPoint] = []
    dominated: list[CostedPoint] = []
    best_cost = math.inf
    for point in ranked:
        if point.cost < best_cost:
            front.append(point)
            best_cost = point.cost
        else:
            dominated.append(point)
    return ParetoResult(front=tuple(front), dominated=tuple(dominated))


def recommend(
    dataset: Dataset,
    catalog: VmCatalog,
    input: AppInput,
    *,
    billing: str = "per-minute",
) -> ParetoResult:
    """Pareto recommendation over every record matching the given input.

    Predicted records participate alongside measured and simulated ones and
    stay visibly flagged through their provenance.
    """
    records = dataset.match(input=input)
    if not records:
        raise NoDataError(f"no benchmark records for {input.describe()}")
    points = []
    for record in records:
        sku = check_against_catalog(record.scenario, catalog)
        points.append(
            CostedPoint(
                scenario=record.scenario,
                exec_time_s=record.exec_time_s,
                cost=compute_cost(
                    record.exec_time_s, record.scenario.n_vms, sku, billing=billing
                ),
                provenance=record.provenance,
            )
        )
    return pareto_front(points)


def annotations(result: ParetoResult) -> dict[str, CostedPoint]:
    """Headline picks off the front: fastest, cheapest, best time*cost balance.

    These annotate the recommendation; they never filter the front itself.
    """
    front = result.front
    balanced = min(front, key=lambda p: (p.exec_time_s * p.cost, _candidate_order(p)))
    return {"fastest": front[0], "cheapest": front[-1], "balanced": balanced}

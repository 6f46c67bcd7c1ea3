"""Execution-time prediction across VM types and application inputs.

Two mechanisms:

* cross-VM: map one SKU's strong-scaling curve onto another SKU by a single
  multiplicative factor, fitted by least squares against one or two probe
  measurements, evaluated through piecewise-linear interpolation of the
  source curve;
* cross-input: rescale a curve to a new input value by the ratio of input
  sizes, for parameters known to influence run time linearly.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import AppInput, ScalingCurve
from .errors import OutOfRangeError, ValidationError
from .optimizer import OptimizerConfig, minimize

# extrapolated times are clamped here instead of going non-positive
TIME_FLOOR_S = 1e-9

CROSS_VM = "cross-vm"
CROSS_INPUT = "cross-input"


@dataclass(frozen=True)
class ScalingFit:
    """Fitted curve-to-curve factor with its least-squares residual."""

    factor: float
    residual: float
    iterations: int
    converged: bool

    def __post_init__(self):
        if self.factor <= 0:
            raise ValidationError(f"scaling factor must be positive, got {self.factor}")
        if self.residual < 0:
            raise ValidationError("residual cannot be negative")


def interpolate(curve: ScalingCurve, n: float, *, extrapolate: bool = False) -> float:
    """Execution time at ``n`` VMs, linear within each curve segment.

    Knots return their stored value exactly. Outside the node range this
    raises :class:`OutOfRangeError` unless ``extrapolate`` is set, in which
    case the nearest segment's slope is extended and the result is clamped
    below at ``TIME_FLOOR_S``.
    """
    nodes = curve.nodes()
    times = curve.times()
    lo, hi = nodes[0], nodes[-1]
    if n < lo or n > hi:
        if not extrapolate:
            raise OutOfRangeError(
                f"n_vms={n:g} is outside the curve range [{lo}, {hi}]", lo=lo, hi=hi
            )
        if len(nodes) == 1:
            return times[0]
        if n < lo:
            i0, i1 = 0, 1
            edge = 0
        else:
            i0, i1 = len(nodes) - 2, len(nodes) - 1
            edge = i1
        slope = (times[i1] - times[i0]) / (nodes[i1] - nodes[i0])
        return max(times[edge] + (n - nodes[edge]) * slope, TIME_FLOOR_S)
    i = bisect_left(nodes, n)
    if nodes[i] == n:
        return times[i]
    n0, n1 = nodes[i - 1], nodes[i]
    t0, t1 = times[i - 1], times[i]
    return t0 + (n - n0) * (t1 - t0) / (n1 - n0)


def fit_scaling_factor(
    source: ScalingCurve,
    target_points: Sequence[tuple[int, float]],
    config: OptimizerConfig | None = None,
) -> ScalingFit:
    """Fit the factor mapping ``source`` onto the target probe measurements.

    Minimizes the sum of squared deviations between scaled interpolated
    source times and the target times, starting from the ratio at the first
    target point. Every target node must lie inside the source node range.
    """
    if not target_points:
        raise ValidationError("at least one target point is required to fit a scaling factor")
    targets = [(n, float(t)) for n, t in target_points]
    for n, t in targets:
        if t <= 0:
            raise ValidationError(f"target time at n_vms={n} must be positive, got {t}")
    source_times = np.array([interpolate(source, n) for n, _ in targets])
    target_times = np.array([t for _, t in targets])

    def objective(x: np.ndarray) -> float:
        deviations = x[0] * source_times - target_times
        return float(deviations @ deviations)

    x0 = targets[0][1] / float(source_times[0])
    outcome = minimize(objective, np.array([x0]), config or OptimizerConfig())
    return ScalingFit(
        factor=float(outcome.x_min[0]),
        residual=float(outcome.f_min),
        iterations=outcome.iterations,
        converged=outcome.converged,
    )


def predict_cross_vm(source: ScalingCurve, fit: ScalingFit, target_sku: str) -> ScalingCurve:
    """New curve for ``target_sku``: source times scaled by the fitted factor."""
    if not target_sku:
        raise ValidationError("target SKU name must be non-empty")
    points = tuple((n, t * fit.factor) for n, t in source.points)
    return ScalingCurve(
        sku_name=target_sku,
        input=source.input,
        procs_per_vm=source.procs_per_vm,
        points=points,
    )


def predict_cross_input(
    curve: ScalingCurve, target_input: AppInput, *, scaling: str = "linear"
) -> ScalingCurve:
    """New curve at a different input value: times scaled by the value ratio.

    Only parameters whose influence is known to be linear may be scaled;
    pass ``scaling="none"`` for parameters that must not be extrapolated,
    which refuses instead of guessing.
    """
    if curve.input.app_name != target_input.app_name:
        raise ValidationError(
            f"application mismatch: curve is for '{curve.input.app_name}', "
            f"target is '{target_input.app_name}'"
        )
    if curve.input.param_name != target_input.param_name:
        raise ValidationError(
            f"parameter mismatch: curve is over '{curve.input.param_name}', "
            f"target is '{target_input.param_name}'"
        )
    if scaling == "none":
        raise ValidationError(
            f"parameter '{target_input.param_name}' is configured as non-scalable; "
            "refusing to predict across its values"
        )
    if scaling != "linear":
        raise ValidationError(f"unknown input scaling policy '{scaling}'")
    ratio = target_input.value / curve.input.value
    points = tuple((n, t * ratio) for n, t in curve.points)
    return ScalingCurve(
        sku_name=curve.sku_name,
        input=target_input,
        procs_per_vm=curve.procs_per_vm,
        points=points,
    )

"""Interpolation, scaling-factor fitting, and the two prediction mechanisms.

The fit tests check BFGS output against the closed-form least-squares
solution s* = sum(t_i * f_i) / sum(f_i^2), computed independently here.
"""

from __future__ import annotations

import numpy as np
import pytest

from hpcadvisor import (
    AppInput,
    OutOfRangeError,
    ScalingCurve,
    ScalingFit,
    ValidationError,
    fit_scaling_factor,
    interpolate,
    predict_cross_input,
    predict_cross_vm,
)

from conftest import make_input


def curve(points, value=1e6, sku="HBv2", procs=120, param="cells"):
    return ScalingCurve(
        sku_name=sku,
        input=AppInput("cfd_demo", param, value),
        procs_per_vm=procs,
        points=tuple(points),
    )


def closed_form_factor(source, targets):
    """Independent least-squares oracle for the optimal scaling factor."""
    f = np.array([interpolate(source, n) for n, _ in targets])
    t = np.array([t for _, t in targets])
    return float(t @ f) / float(f @ f)


def objective(source, targets, s):
    return sum((s * interpolate(source, n) - t) ** 2 for n, t in targets)


def random_instance(rng, n_targets=None):
    n_points = rng.integers(3, 9)
    nodes = np.sort(rng.choice(np.arange(1, 64), size=n_points, replace=False))
    times = rng.uniform(1.0, 1e4, size=n_points)
    source = curve([(int(n), float(t)) for n, t in zip(nodes, times)])
    k = int(n_targets if n_targets is not None else rng.integers(1, 4))
    target_nodes = rng.uniform(nodes[0], nodes[-1], size=k)
    targets = [(float(n), float(rng.uniform(1.0, 1e4))) for n in target_nodes]
    return source, targets


BASE = curve([(1, 100.0), (2, 60.0), (4, 35.0)])


class TestInterpolate:
    def test_exact_at_knot(self):
        assert interpolate(BASE, 2) == 60.0

    def test_segment_midpoint(self):
        assert interpolate(BASE, 3) == 47.5

    def test_out_of_range_raises(self):
        with pytest.raises(OutOfRangeError) as err:
            interpolate(BASE, 8)
        assert err.value.lo == 1 and err.value.hi == 4

    def test_extrapolation_extends_last_segment(self):
        # slope beyond n=4 is (35-60)/2 = -12.5 per node
        assert interpolate(BASE, 6, extrapolate=True) == pytest.approx(35.0 - 2 * 12.5)
        # and before n=1 the first segment's slope
        assert interpolate(BASE, 0.5, extrapolate=True) == pytest.approx(120.0)

    def test_extrapolation_clamped_at_floor(self):
        falling = curve([(1, 2e-9), (2, 1e-9)])
        assert interpolate(falling, 8, extrapolate=True) == 1e-9

    def test_single_point_curve(self):
        single = curve([(4, 50.0)])
        assert interpolate(single, 4) == 50.0
        with pytest.raises(OutOfRangeError):
            interpolate(single, 2)
        assert interpolate(single, 2, extrapolate=True) == 50.0

    def test_knot_exactness_on_random_curves(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            source, _ = random_instance(rng)
            for n, t in source.points:
                assert interpolate(source, n) == t


class TestFitScalingFactor:
    def test_single_point_exact_ratio(self):
        fit = fit_scaling_factor(BASE, [(2, 30.0)])
        assert fit.factor == pytest.approx(0.5, abs=1e-9)
        assert fit.residual == pytest.approx(0.0, abs=1e-12)

    def test_two_point_least_squares(self):
        fit = fit_scaling_factor(BASE, [(1, 80.0), (4, 21.0)])
        oracle = 8735.0 / 11225.0
        assert abs(fit.factor - oracle) / oracle <= 1e-6
        assert fit.factor == pytest.approx(0.77817, abs=5e-6)

    def test_empty_target_rejected(self):
        with pytest.raises(ValidationError):
            fit_scaling_factor(BASE, [])

    def test_out_of_range_target_rejected(self):
        with pytest.raises(OutOfRangeError):
            fit_scaling_factor(BASE, [(8, 20.0)])

    def test_matches_closed_form_on_random_instances(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            source, targets = random_instance(rng)
            fit = fit_scaling_factor(source, targets)
            star = closed_form_factor(source, targets)
            assert abs(fit.factor - star) / star <= 1e-6

    def test_fitted_factor_is_global_minimum(self):
        rng = np.random.default_rng(43)
        eps = float(np.finfo(float).eps)
        for _ in range(30):
            source, targets = random_instance(rng)
            fit = fit_scaling_factor(source, targets)
            star = closed_form_factor(source, targets)
            best = objective(source, targets, fit.factor)
            # the direct comparison against s* needs J's own rounding slack
            at_star = objective(source, targets, star)
            assert best <= at_star + 1e-9 + 8 * eps * at_star
            for s in rng.uniform(star / 10, 10 * star, size=100):
                assert best <= objective(source, targets, s) + 1e-9

    def test_source_scale_invariance(self):
        rng = np.random.default_rng(44)
        for _ in range(30):
            n_points = rng.integers(3, 9)
            nodes = np.sort(rng.choice(np.arange(1, 40), size=n_points, replace=False))
            times = rng.uniform(10.0, 1e3, size=n_points)
            source = curve([(int(n), float(t)) for n, t in zip(nodes, times)])
            targets = [
                (float(rng.uniform(nodes[0], nodes[-1])), float(rng.uniform(10.0, 1e3)))
                for _ in range(2)
            ]
            c = float(rng.uniform(0.1, 10.0))
            scaled = curve([(n, c * t) for n, t in source.points])
            fit = fit_scaling_factor(source, targets)
            fit_scaled = fit_scaling_factor(scaled, targets)
            assert fit_scaled.factor == pytest.approx(fit.factor / c, rel=1e-9)
            out = predict_cross_vm(source, fit, "X")
            out_scaled = predict_cross_vm(scaled, fit_scaled, "X")
            for (_, a), (_, b) in zip(out.points, out_scaled.points):
                assert b == pytest.approx(a, rel=1e-9)

    def test_exact_recovery_of_constant_factor(self):
        rng = np.random.default_rng(45)
        for _ in range(50):
            source, _ = random_instance(rng)
            kappa = float(rng.uniform(0.05, 20.0))
            lo, hi = source.min_node, source.max_node
            targets = [
                (n, kappa * interpolate(source, n))
                for n in rng.uniform(lo, hi, size=int(rng.integers(1, 4)))
            ]
            fit = fit_scaling_factor(source, targets)
            assert fit.factor == pytest.approx(kappa, rel=1e-9)
            assert fit.residual <= 1e-9

    def test_scaling_fit_invariants(self):
        with pytest.raises(ValidationError):
            ScalingFit(factor=-1.0, residual=0.0, iterations=1, converged=True)


class TestPredictCrossVm:
    def test_scales_times(self):
        fit = ScalingFit(factor=0.5, residual=0.0, iterations=1, converged=True)
        out = predict_cross_vm(curve([(1, 100.0), (2, 60.0)]), fit, "HC")
        assert out.points == ((1, 50.0), (2, 30.0))
        assert out.sku_name == "HC"

    def test_identity_factor(self):
        fit = ScalingFit(factor=1.0, residual=0.0, iterations=0, converged=True)
        out = predict_cross_vm(BASE, fit, "HBv3")
        assert out.points == BASE.points
        assert out.sku_name == "HBv3"
        assert out.input == BASE.input
        assert out.procs_per_vm == BASE.procs_per_vm

    def test_fitted_curve_values(self):
        fit = fit_scaling_factor(BASE, [(1, 80.0), (4, 21.0)])
        out = predict_cross_vm(BASE, fit, "HC")
        oracle = 8735.0 / 11225.0
        expected = [100.0 * oracle, 60.0 * oracle, 35.0 * oracle]
        for (_, got), want in zip(out.points, expected):
            assert got == pytest.approx(want, rel=1e-6)
        # matches the rounded reference values
        assert [round(t, 3) for _, t in out.points] == [77.817, 46.690, 27.236]


class TestPredictCrossInput:
    def test_doubling_cells_doubles_times(self):
        source = curve([(1, 100.0), (2, 60.0)], value=1e6)
        out = predict_cross_input(source, make_input(2e6))
        assert out.points == ((1, 200.0), (2, 120.0))
        assert out.input.value == 2e6

    def test_identity(self):
        source = curve([(1, 100.0), (2, 60.0)])
        out = predict_cross_input(source, source.input)
        assert out.points == source.points

    def test_parameter_mismatch_rejected(self):
        source = curve([(1, 100.0)], param="cells")
        with pytest.raises(ValidationError, match="parameter mismatch"):
            predict_cross_input(source, AppInput("cfd_demo", "atoms", 2e6))

    def test_app_mismatch_rejected(self):
        source = curve([(1, 100.0)])
        with pytest.raises(ValidationError, match="application mismatch"):
            predict_cross_input(source, AppInput("other_app", "cells", 2e6))

    def test_non_scalable_parameter_refused(self):
        source = curve([(1, 100.0)])
        with pytest.raises(ValidationError, match="non-scalable"):
            predict_cross_input(source, make_input(2e6), scaling="none")

    def test_composition_and_identity_properties(self):
        rng = np.random.default_rng(46)
        for _ in range(100):
            source, _ = random_instance(rng)
            v1 = float(rng.uniform(0.1, 10.0)) * source.input.value
            v2 = float(rng.uniform(0.1, 10.0)) * source.input.value
            one = predict_cross_input(source, make_input(v1))
            composed = predict_cross_input(one, make_input(v2))
            direct = predict_cross_input(source, make_input(v2))
            for (_, a), (_, b) in zip(composed.points, direct.points):
                assert abs(a - b) <= 1e-12 * abs(b)
            identity = predict_cross_input(source, source.input)
            assert identity.points == source.points

"""Quasi-Newton (BFGS) minimizer with central-difference gradients.

Callers supply only the objective; gradients come from central finite
differences. The inverse Hessian is updated with the BFGS formula behind
a backtracking Armijo line search, with a curvature guard that keeps the
approximation positive definite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DivergedError, ValidationError

Objective = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class OptimizerConfig:
    grad_tolerance: float = 1e-8
    max_iterations: int = 200
    fd_step: float = 1e-6
    armijo_c1: float = 1e-4
    backtrack_factor: float = 0.5
    max_backtracks: int = 50

    def __post_init__(self):
        if self.grad_tolerance <= 0 or self.fd_step <= 0:
            raise ValidationError("tolerances and fd_step must be positive")
        if self.max_iterations < 1 or self.max_backtracks < 1:
            raise ValidationError("iteration limits must be positive")
        if not 0.0 < self.armijo_c1 < 1.0:
            raise ValidationError("armijo_c1 must lie in (0, 1)")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValidationError("backtrack_factor must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class OptimizeResult:
    x_min: np.ndarray
    f_min: float
    iterations: int
    converged: bool
    gradient_norm: float


def _central_gradient(f: Objective, x: np.ndarray, step: float) -> np.ndarray:
    # the step scales with the coordinate magnitude so large arguments keep
    # enough significand after the forward/backward cancellation
    g = np.empty_like(x)
    probe = x.copy()
    for i in range(x.size):
        h = step * max(1.0, abs(float(x[i])))
        probe[i] = x[i] + h
        f_plus = float(f(probe))
        probe[i] = x[i] - h
        f_minus = float(f(probe))
        probe[i] = x[i]
        g[i] = (f_plus - f_minus) / (2.0 * h)
    return g


def minimize(f: Objective, x0: Sequence[float] | np.ndarray,
             config: OptimizerConfig | None = None) -> OptimizeResult:
    """Minimize ``f`` from ``x0``; returns the best iterate found.

    Accepted steps satisfy the Armijo condition, so the objective is
    non-increasing across iterates. If the line search cannot make
    progress the best iterate is returned with ``converged=False``; a
    non-finite objective at an accepted point raises :class:`DivergedError`
    carrying the best iterate.
    """
    cfg = config or OptimizerConfig()
    x = np.array(x0, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValidationError("x0 must contain at least one coordinate")
    fx = float(f(x))
    if not np.isfinite(fx):
        raise ValidationError("objective must be finite at the starting point")

    def result(converged: bool, iterations: int, gnorm: float) -> OptimizeResult:
        return OptimizeResult(
            x_min=x.copy(), f_min=fx, iterations=iterations,
            converged=converged, gradient_norm=gnorm,
        )

    g = _central_gradient(f, x, cfg.fd_step)
    if not np.all(np.isfinite(g)):
        raise DivergedError(
            "objective is not finite near the starting point",
            best=result(False, 0, float("nan")),
        )
    identity = np.eye(x.size)
    inv_hessian = identity.copy()
    gnorm = float(np.linalg.norm(g))
    iterations = 0

    while gnorm > cfg.grad_tolerance and iterations < cfg.max_iterations:
        direction = -(inv_hessian @ g)
        slope = float(g @ direction)
        if slope >= 0.0:
            # approximation lost the descent property; restart from steepest descent
            inv_hessian = identity.copy()
            direction = -g
            slope = -float(g @ g)
            if slope == 0.0:
                break

        alpha = 1.0
        accepted = False
        trial = x
        f_trial = fx
        for _ in range(cfg.max_backtracks + 1):
            trial = x + alpha * direction
            f_trial = float(f(trial))
            if np.isfinite(f_trial) and f_trial <= fx + cfg.armijo_c1 * alpha * slope:
                accepted = True
                break
            alpha *= cfg.backtrack_factor
        if not accepted:
            return result(False, iterations, gnorm)

        g_new = _central_gradient(f, trial, cfg.fd_step)
        if not np.all(np.isfinite(g_new)):
            raise DivergedError(
                "objective became non-finite near an accepted iterate",
                best=result(False, iterations, gnorm),
            )
        s = trial - x
        y = g_new - g
        sy = float(s @ y)
        # curvature guard: skip the update when s.y is too small to keep SPD
        if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            rho = 1.0 / sy
            v = identity - rho * np.outer(s, y)
            inv_hessian = v @ inv_hessian @ v.T + rho * np.outer(s, s)
        x, fx, g = trial, f_trial, g_new
        gnorm = float(np.linalg.norm(g))
        iterations += 1

    return result(gnorm <= cfg.grad_tolerance, iterations, gnorm)

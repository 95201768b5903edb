"""Steepest descent on the transformed functional with Armijo backtracking."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

from .descent import (
    GradientBundle,
    IsoperimetricConstraint,
    boundary_mode_gradient,
    constraint_gradient,
    evaluate_constraint,
    isoperimetric_direction,
    mode_projection,
)
from .grid import GridFunction, Placement, UniformGrid, inner_product_l2
from .operators import slab_residuals
from .problems import EvaluationError, Problem, evaluate_functional, reconstruct_u

log = logging.getLogger(__name__)

REPROJECT_EVERY = 50


class LineSearchFailure(ArithmeticError):
    """No step above ``min_step`` satisfied the sufficient-decrease test."""


class Termination(enum.Enum):
    GRADIENT_TOLERANCE = "GradientTolerance"
    MAX_ITERATIONS = "MaxIterations"
    LINE_SEARCH_FAILURE = "LineSearchFailure"
    CRITICAL_POINT = "CriticalPointDetected"


@dataclass(frozen=True)
class OptimizerConfig:
    max_iters: int = 500
    tol_grad: float = 1e-6
    armijo_c1: float = 1e-4
    shrink: float = 0.5
    step0: float = 1.0
    min_step: float = 1e-14

    def __post_init__(self):
        if int(self.max_iters) != self.max_iters or self.max_iters < 0:
            raise ValueError(f"max_iters must be a non-negative integer, got {self.max_iters}")
        if not self.tol_grad >= 0:
            raise ValueError(f"tol_grad must be >= 0, got {self.tol_grad}")
        if not 0 < self.armijo_c1 < 1:
            raise ValueError(f"armijo_c1 must lie in (0, 1), got {self.armijo_c1}")
        if not 0 < self.shrink < 1:
            raise ValueError(f"shrink must lie in (0, 1), got {self.shrink}")
        if not self.step0 > 0:
            raise ValueError(f"step0 must be positive, got {self.step0}")
        if not self.min_step > 0:
            raise ValueError(f"min_step must be positive, got {self.min_step}")


class IterationRecord(NamedTuple):
    iter: int
    F: float
    grad_norm: float
    step: float


@dataclass
class DescentReport:
    """Trace of a run.  Record 0 is the initial state with step 0."""

    iterations: list[IterationRecord]
    final_v: GridFunction
    final_u: GridFunction
    termination: Termination
    final_bundle: GradientBundle | None = None
    multipliers: list[float] = field(default_factory=list)


def backtracking_line_search(
    objective: Callable[[float], float],
    f0: float,
    slope: float,
    config: OptimizerConfig,
) -> tuple[float, float]:
    """Largest ``step0 * shrink**k`` with ``objective(a) <= f0 + c1 a slope``.

    Returns ``(step, objective(step))``.
    """
    if not slope < 0:
        raise ValueError(f"not a descent direction: directional derivative {slope}")
    alpha = config.step0
    while alpha >= config.min_step:
        fa = objective(alpha)
        if fa <= f0 + config.armijo_c1 * alpha * slope:
            return alpha, fa
        alpha *= config.shrink
    raise LineSearchFailure(f"no acceptable step above min_step={config.min_step}")


def armijo_search(
    problem: Problem,
    v: GridFunction,
    bundle: GradientBundle,
    config: OptimizerConfig,
    direction: GridFunction | None = None,
) -> float:
    """Accepted step along ``direction`` (default ``-G/||G||``)."""
    if direction is None:
        if not bundle.grad_norm > 0:
            raise ValueError("armijo_search needs a nonzero gradient")
        direction = bundle.G * (-1.0 / bundle.grad_norm)
    slope = inner_product_l2(bundle.G, direction)
    p = problem.with_mode(bundle.mode)
    alpha, _ = backtracking_line_search(
        lambda a: evaluate_functional(p, v + direction * a),
        bundle.functional_value,
        slope,
        config,
    )
    return alpha


def _feasible_start(problem, v, constraint):
    v = mode_projection(v, problem.boundary_mode)
    if constraint is None:
        return v
    QJ = mode_projection(constraint_gradient(problem, constraint, v), problem.boundary_mode)
    nj2 = inner_product_l2(QJ, QJ)
    if nj2 > 0:
        gap = constraint.c - evaluate_constraint(problem, constraint, v)
        v = v + QJ * (gap / nj2)
    return v


def minimize(
    problem: Problem,
    grid: UniformGrid,
    config: OptimizerConfig | None = None,
    v0: GridFunction | None = None,
    constraint: IsoperimetricConstraint | None = None,
    callback: Callable[[int, GridFunction, GradientBundle], None] | None = None,
) -> DescentReport:
    """Normalised steepest descent ``v <- v + alpha h`` with ``h = -G/||G||``.

    ``v0`` defaults to zero and is projected onto the feasible subspace if
    its slab residuals exceed 1e-10.  With a ``constraint`` the start is
    shifted along the projected constraint gradient so that ``J = c`` holds
    and every step stays tangent to the constraint.  ``callback(k, v,
    bundle)`` sees every accepted iterate.
    """
    config = config or OptimizerConfig()
    mode = problem.boundary_mode
    if v0 is None:
        v0 = GridFunction.zeros(grid, Placement.CELLS, problem.d)
    elif v0.grid != grid:
        raise ValueError("v0 does not live on the given grid")
    axes = mode.constrained_axes
    if axes != () and max(slab_residuals(v0, axes), default=0.0) > 1e-10:
        v0 = mode_projection(v0, mode)
    if constraint is not None:
        v0 = _feasible_start(problem, v0, constraint)

    def gradient(v):
        if constraint is None:
            return boundary_mode_gradient(problem, v)
        return isoperimetric_direction(problem, constraint, v)

    records: list[IterationRecord] = []
    multipliers: list[float] = []
    v = v0
    bundle = None

    def report(termination):
        return DescentReport(
            records, v, reconstruct_u(problem, v), termination, bundle, multipliers
        )

    try:
        bundle = gradient(v)
        records.append(IterationRecord(0, bundle.functional_value, bundle.grad_norm, 0.0))
        if callback is not None:
            callback(0, v, bundle)
        k = 0
        while True:
            if bundle.multiplier is not None:
                multipliers.append(bundle.multiplier)
            if bundle.grad_norm == 0.0:
                termination = Termination.CRITICAL_POINT
                break
            if bundle.grad_norm <= config.tol_grad:
                termination = Termination.GRADIENT_TOLERANCE
                break
            if k >= config.max_iters:
                termination = Termination.MAX_ITERATIONS
                break
            h = bundle.G * (-1.0 / bundle.grad_norm)
            try:
                alpha = armijo_search(problem, v, bundle, config, direction=h)
            except LineSearchFailure:
                termination = Termination.LINE_SEARCH_FAILURE
                break
            k += 1
            v = v + h * alpha
            if k % REPROJECT_EVERY == 0:
                v = mode_projection(v, mode)
            bundle = gradient(v)
            records.append(
                IterationRecord(k, bundle.functional_value, bundle.grad_norm, alpha)
            )
            log.debug("iter %d F=%.12g |G|=%.3e step=%.3e", k, *records[-1][1:])
            if callback is not None:
                callback(k, v, bundle)
    except EvaluationError as exc:
        exc.report = report(None)
        raise
    return report(termination)

"""Gradients and steepest-descent directions of the transformed functional.

For ``F(v) = I(ubar + T v)`` the derivative in direction ``h`` is
``<Q, h>`` where ``Q`` collects tail integrals of ``df/du`` and ``df/dz_i``.
Projecting ``Q`` onto the feasible subspace gives the gradient ``G`` and
``-G / ||G||`` is the steepest-descent direction in the L2 norm on ``v``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expressions import Expr, as_expression
from .grid import (
    GridError,
    GridFunction,
    MultiIndex,
    Placement,
    inner_product_l2,
    sample_expression,
)
from .operators import (
    cumulative_integral_axis,
    full_lift_T,
    lift_adjoint_axes,
    project_kernel,
    slab_integral,
)
from .problems import (
    BoundaryMode,
    Problem,
    ProblemError,
    check_finite,
    evaluate_state,
    lift_samples,
)


class CriticalPointError(ArithmeticError):
    """The gradient vanishes, so no descent direction exists."""


class DegenerateConstraintError(ArithmeticError):
    """The constraint functional is constant on the feasible affine space."""


@dataclass(frozen=True)
class GradientBundle:
    Q: GridFunction
    G: GridFunction
    grad_norm: float
    functional_value: float
    mode: BoundaryMode = BoundaryMode.ALL_SIDES
    multiplier: float | None = None


@dataclass(frozen=True)
class IsoperimetricConstraint:
    """Linear constraint ``int g0 u + g1 u_x1 + g2 u_x2 dx = c`` (n = 2, d = 1)."""

    g0: Expr
    g1: Expr
    g2: Expr
    c: float = 0.0

    def __init__(self, g0="0", g1="0", g2="0", c: float = 0.0):
        object.__setattr__(self, "g0", as_expression(g0, 2))
        object.__setattr__(self, "g1", as_expression(g1, 2))
        object.__setattr__(self, "g2", as_expression(g2, 2))
        object.__setattr__(self, "c", float(c))


def mode_projection(v: GridFunction, mode: BoundaryMode) -> GridFunction:
    """Orthogonal projection onto the feasible subspace of a boundary mode."""
    axes = mode.constrained_axes
    if axes == ():
        return v
    return project_kernel(v, axes)


# Projecting Q costs about eps*|Q| of absolute accuracy, so a projected
# gradient below this multiple of eps*|Q| is rounding noise.
GRADIENT_FLOOR = 64 * np.finfo(float).eps


def _gradient_from(Q: GridFunction, mode: BoundaryMode) -> GridFunction:
    # second pass removes the O(eps*|Q|) rounding left in the complement
    G = mode_projection(mode_projection(Q, mode), mode)
    if G is Q:
        return G
    scale = np.sqrt(inner_product_l2(Q, Q))
    if np.sqrt(inner_product_l2(G, G)) <= GRADIENT_FLOOR * scale:
        return G.with_values(np.zeros_like(G.values))
    return G


def _assemble_Q(
    fu: np.ndarray, fz: np.ndarray, v: GridFunction, anchors
) -> GridFunction:
    n = v.grid.n
    q = lift_adjoint_axes(v.with_values(fu), range(n), anchors)
    for i in range(n):
        others = [k for k in range(n) if k != i]
        q = q + lift_adjoint_axes(v.with_values(fz[:, i]), others, anchors)
    return q


def _derivatives(problem: Problem, v: GridFunction):
    st = evaluate_state(problem, v)
    lag = problem.lagrangian
    cells = v.shape
    f = check_finite(np.broadcast_to(lag.value(st.x, st.u, st.z), cells), "Lagrangian value")
    fu = check_finite(
        np.broadcast_to(lag.du(st.x, st.u, st.z), (problem.d,) + cells), "df/du"
    )
    fz = check_finite(
        np.broadcast_to(lag.dz(st.x, st.u, st.z), (problem.d, problem.n) + cells),
        "df/dz",
    )
    return float(np.sum(f) * v.grid.cell_volume), fu, fz


def compute_Q(problem: Problem, v: GridFunction) -> GridFunction:
    """Representer of the derivative of ``F`` at ``v`` before projection."""
    _, fu, fz = _derivatives(problem, v)
    return _assemble_Q(fu, fz, v, problem.boundary_mode.anchors)


def _bundle(Q: GridFunction, G: GridFunction, value: float, mode, multiplier=None):
    norm = float(np.sqrt(max(inner_product_l2(G, G), 0.0)))
    return GradientBundle(Q, G, norm, value, mode, multiplier)


def boundary_mode_gradient(
    problem: Problem, v: GridFunction, mode: BoundaryMode | str | None = None
) -> GradientBundle:
    """Gradient bundle for the given boundary mode (default: the problem's)."""
    if mode is not None:
        try:
            problem = problem.with_mode(mode)
        except ProblemError as exc:
            raise GridError(str(exc)) from exc
    mode = problem.boundary_mode
    value, fu, fz = _derivatives(problem, v)
    Q = _assemble_Q(fu, fz, v, mode.anchors)
    return _bundle(Q, _gradient_from(Q, mode), value, mode)


def compute_G(problem: Problem, v: GridFunction) -> GradientBundle:
    if problem.boundary_mode is not BoundaryMode.ALL_SIDES:
        raise ProblemError("compute_G handles all_sides; use boundary_mode_gradient")
    return boundary_mode_gradient(problem, v)


def closed_form_direction_2d(Q: GridFunction) -> GridFunction:
    """Average-subtraction form of the 2-D descent numerator.

    Returns ``-Q + mean_x1(Q) + mean_x2(Q) - mean(Q)`` with midpoint means;
    it equals ``-G`` for the all-sides gradient ``G``.
    """
    if Q.grid.n != 2 or Q.placement is not Placement.CELLS:
        raise GridError("closed form needs a cell-placed 2-D field")
    l1, l2 = Q.grid.domain.lengths
    s1 = slab_integral(Q, MultiIndex([1, 0])).values / l1
    s2 = slab_integral(Q, MultiIndex([0, 1])).values / l2
    s12 = slab_integral(Q, MultiIndex([1, 1])).values / (l1 * l2)
    return Q.with_values(-Q.values + s1 + s2 - s12)


def steepest_direction(bundle: GradientBundle) -> tuple[GridFunction, GridFunction]:
    """Unit descent direction ``h = -G/||G||`` and its lift ``T h``."""
    if not bundle.grad_norm > 0:
        raise CriticalPointError("gradient vanishes: critical point, no descent direction")
    h = bundle.G * (-1.0 / bundle.grad_norm)
    return h, full_lift_T(h, anchors=bundle.mode.anchors)


def directional_derivative(problem: Problem, v: GridFunction, h: GridFunction) -> float:
    return inner_product_l2(boundary_mode_gradient(problem, v).G, h)


def euler_lagrange_residual(problem: Problem, v: GridFunction) -> GridFunction:
    """``df/du - sum_i d/dx_i df/dz_i`` at interior nodes.

    Divergence terms are centred differences of the cell-valued
    ``df/dz_i``; ``df/du`` is evaluated at the node with the gradient
    averaged from the surrounding cells.  Boundary entries are zero.
    """
    st = evaluate_state(problem, v)
    lag = problem.lagrangian
    n, d = problem.n, problem.d
    grid = v.grid
    fz = check_finite(
        np.broadcast_to(lag.dz(st.x, st.u, st.z), (d, n) + v.shape), "df/dz"
    )
    interior = tuple(slice(1, -1) for _ in range(n))

    # nodal u and x, gradient averaged to interior nodes
    u_nodes = _node_values(problem, v)
    x_nodes = np.array(grid.coordinates(Placement.NODES))
    z_nodes = _cells_to_interior_nodes(st.z.reshape((d * n,) + v.shape), range(n))
    z_nodes = z_nodes.reshape((d, n) + z_nodes.shape[1:])
    x_int = x_nodes[(slice(None),) + interior]
    u_int = u_nodes[(slice(None),) + interior]
    fu = check_finite(
        np.broadcast_to(lag.du(x_int, u_int, z_nodes), u_int.shape), "df/du"
    )

    div = np.zeros_like(fu)
    for i in range(n):
        comp = fz[:, i]
        ax = i + 1
        diff = np.diff(comp, axis=ax) / grid.spacing[i]
        others = [k for k in range(n) if k != i]
        div += _cells_to_interior_nodes(diff, others)
    out = np.zeros((d,) + grid.node_shape)
    out[(slice(None),) + interior] = fu - div
    return GridFunction(grid, Placement.NODES, check_finite(out, "residual"))


def _cells_to_interior_nodes(arr: np.ndarray, axes) -> np.ndarray:
    for i in axes:
        ax = i + 1
        m = arr.shape[ax]
        arr = 0.5 * (
            np.take(arr, np.arange(m - 1), axis=ax) + np.take(arr, np.arange(1, m), axis=ax)
        )
    return arr


def _node_values(problem: Problem, v: GridFunction) -> np.ndarray:
    lifted = full_lift_T(v, anchors=problem.boundary_mode.anchors)
    return lift_samples(problem, v.grid).ubar_nodes.values + lifted.values


# -- isoperimetric constraint ------------------------------------------------


def _constraint_fields(problem: Problem, constraint: IsoperimetricConstraint, v):
    if problem.n != 2 or problem.d != 1:
        raise ProblemError("isoperimetric constraints need n = 2 and d = 1")
    if problem.boundary_mode is not BoundaryMode.ALL_SIDES:
        raise ProblemError("isoperimetric constraints need the all_sides mode")
    grid = v.grid
    g0, g1, g2 = (
        sample_expression(e, grid, Placement.CELLS).values
        for e in (constraint.g0, constraint.g1, constraint.g2)
    )
    return g0, np.stack([g1, g2], axis=1)


def constraint_gradient(
    problem: Problem, constraint: IsoperimetricConstraint, v: GridFunction
) -> GridFunction:
    """``Q_J``: representer of the derivative of the linear constraint."""
    g0, gz = _constraint_fields(problem, constraint, v)
    return _assemble_Q(g0, gz, v, None)


def evaluate_constraint(
    problem: Problem, constraint: IsoperimetricConstraint, v: GridFunction
) -> float:
    """Midpoint value of ``J(ubar + T v)``."""
    g0, gz = _constraint_fields(problem, constraint, v)
    st = evaluate_state(problem, v)
    integrand = g0 * st.u + np.sum(gz * st.z, axis=1)
    return float(np.sum(integrand) * v.grid.cell_volume)


def isoperimetric_direction(
    problem: Problem, constraint: IsoperimetricConstraint, v: GridFunction
) -> GradientBundle:
    """Gradient of ``F`` tangent to the constraint ``J = c``.

    The multiplier ``lam = -<P Q_I, P Q_J> / ||P Q_J||^2`` makes
    ``G = P(Q_I + lam Q_J)`` orthogonal to ``P Q_J``.
    """
    bundle = boundary_mode_gradient(problem, v)
    QJ = constraint_gradient(problem, constraint, v)
    PQJ = mode_projection(QJ, BoundaryMode.ALL_SIDES)
    nj2 = inner_product_l2(PQJ, PQJ)
    scale = inner_product_l2(QJ, QJ)
    if nj2 == 0.0 or nj2 <= 1e-24 * scale:
        raise DegenerateConstraintError(
            "constraint gradient vanishes after projection; J is constant on the feasible set"
        )
    lam = -inner_product_l2(bundle.G, PQJ) / nj2
    Q = bundle.Q + QJ * lam
    G = _gradient_from(Q, BoundaryMode.ALL_SIDES)
    return _bundle(Q, G, bundle.functional_value, BoundaryMode.ALL_SIDES, lam)


# -- fourth-order lift -------------------------------------------------------


def _trapezoid_cumulative(arr: np.ndarray, ax: int, h: float) -> np.ndarray:
    m = arr.shape[ax]
    lo = np.take(arr, np.arange(m - 1), axis=ax)
    hi = np.take(arr, np.arange(1, m), axis=ax)
    c = np.cumsum(0.5 * h * (lo + hi), axis=ax)
    zshape = list(arr.shape)
    zshape[ax] = 1
    return np.concatenate([np.zeros(zshape), c], axis=ax)


def _double_integral_axis(w: GridFunction, i: int) -> GridFunction:
    once = cumulative_integral_axis(w, i)
    return once.with_values(_trapezoid_cumulative(once.values, i + 1, w.grid.spacing[i]))


def _check_higher_order(v: GridFunction, grid) -> None:
    if grid is not None and grid != v.grid:
        raise GridError("field does not live on the given grid")
    if v.grid.n != 2:
        raise GridError(f"higher-order lift needs rank 2, got {v.grid.n}")
    if v.d != 1 or v.placement is not Placement.CELLS:
        raise GridError("higher-order lift needs a scalar cell-placed field")


def higher_order_lift(v: GridFunction, grid=None) -> GridFunction:
    """Integrate twice along x1 and twice along x2 from the lower faces.

    The first integration is the cumulative midpoint sum onto nodes, the
    second a cumulative trapezoid sum over the node values.
    """
    _check_higher_order(v, grid)
    return _double_integral_axis(_double_integral_axis(v, 0), 1)


def higher_order_normal_derivative(v: GridFunction, axis: int) -> GridFunction:
    """Exact ``axis``-derivative of the piecewise-quadratic lift, at nodes.

    Along ``axis`` the second (trapezoid) integration is dropped, so the
    result is the once-integrated field there.
    """
    _check_higher_order(v, None)
    other = 1 - axis
    w = _double_integral_axis(v, other)
    return cumulative_integral_axis(w, axis)


def higher_order_face_residuals(v: GridFunction) -> dict[tuple[int, str], tuple[float, float]]:
    """Max |value| and max |normal derivative| of the lift on each face."""
    w = higher_order_lift(v).values[0]
    out = {}
    for axis in (0, 1):
        dn = higher_order_normal_derivative(v, axis).values[0]
        for side, idx in (("lower", 0), ("upper", -1)):
            sl = tuple(idx if k == axis else slice(None) for k in range(2))
            out[(axis, side)] = (float(np.max(np.abs(w[sl]))), float(np.max(np.abs(dn[sl]))))
    return out

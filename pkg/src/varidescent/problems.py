"""Lagrangians, boundary lifts and built-in variational problems.

A problem minimises ``I(u) = int f(x, u, grad u) dx`` over
``u = ubar + T v`` with ``v`` in the zero-slab subspace.  Lagrangians are
vectorised: they receive ``x`` of shape ``(n, *pts)``, ``u`` of shape
``(d, *pts)`` and ``z`` (the gradient, ``z[j, i] = du_j/dx_i``) of shape
``(d, n, *pts)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .expressions import Expr, ExpressionError, Num, as_expression, gradient
from .grid import GridFunction, Placement, UniformGrid
from .operators import LOWER, UPPER, center_average, full_lift_T, lifted_gradient


class ProblemError(ValueError):
    """Malformed problem definition or parameter."""


class EvaluationError(ArithmeticError):
    """A Lagrangian or one of its derivatives produced a non-finite value."""

    def __init__(self, what: str, index: tuple[int, ...]):
        super().__init__(f"non-finite {what} at cell {index}")
        self.what = what
        self.index = index
        self.report = None


class BoundaryMode(enum.Enum):
    ALL_SIDES = "all_sides"
    THREE_SIDES_2D = "three_sides_2d"
    TWO_ADJACENT_2D = "two_adjacent_2d"
    ADJACENT_CORNER_2D = "adjacent_corner_2d"

    @property
    def anchors(self) -> tuple[str, ...] | None:
        """Per-axis anchors of the lift used in this mode (None: all lower)."""
        if self is BoundaryMode.ADJACENT_CORNER_2D:
            return (LOWER, UPPER)
        return None

    @property
    def constrained_axes(self) -> tuple[int, ...] | None:
        """Axes whose slab integrals must vanish (None: every axis)."""
        if self is BoundaryMode.ALL_SIDES:
            return None
        if self is BoundaryMode.THREE_SIDES_2D:
            return (0,)
        return ()

    def gamma_mask(self, grid: UniformGrid) -> np.ndarray:
        """Node mask of the boundary part carrying prescribed values."""
        if self is BoundaryMode.ALL_SIDES:
            return grid.boundary_mask()
        faces = {
            BoundaryMode.THREE_SIDES_2D: [(0, "lower"), (0, "upper"), (1, "lower")],
            BoundaryMode.TWO_ADJACENT_2D: [(0, "lower"), (1, "lower")],
            BoundaryMode.ADJACENT_CORNER_2D: [(0, "lower"), (1, "upper")],
        }[self]
        mask = np.zeros(grid.node_shape, dtype=bool)
        for axis, side in faces:
            mask |= grid.face_mask(axis, side)
        return mask


@dataclass(frozen=True, eq=False)
class Lagrangian:
    """Integrand ``f(x, u, z)`` with its partial derivatives in ``u`` and ``z``."""

    value: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    du: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    dz: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def _expr_tuple(values, n: int, what: str) -> tuple[Expr, ...]:
    if isinstance(values, (str, int, float, Expr)):
        values = [values]
    try:
        return tuple(as_expression(e, n) for e in values)
    except ExpressionError as exc:
        raise ProblemError(f"{what}: {exc}") from exc


@dataclass(frozen=True)
class Problem:
    """A fully wired variational problem on an ``n``-dimensional box."""

    n: int
    d: int
    lagrangian: Lagrangian
    lift: tuple[Expr, ...] = ()
    lift_grad: tuple[tuple[Expr, ...], ...] = ()
    exact_solution: tuple[Expr, ...] | None = None
    boundary_mode: BoundaryMode = BoundaryMode.ALL_SIDES
    name: str = "custom"
    data: Mapping[str, Expr] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ProblemError(f"need n >= 1 and d >= 1, got n={self.n}, d={self.d}")
        lift = self.lift or (Num(0.0),) * self.d
        lift = _expr_tuple(lift, self.n, "lift")
        if len(lift) != self.d:
            raise ProblemError(f"lift has {len(lift)} components, expected {self.d}")
        if self.lift_grad:
            lift_grad = tuple(
                _expr_tuple(row, self.n, "lift_grad") for row in self.lift_grad
            )
            if len(lift_grad) != self.d or any(len(r) != self.n for r in lift_grad):
                raise ProblemError(f"lift_grad must be {self.d} rows of {self.n}")
        else:
            lift_grad = tuple(gradient(e, self.n) for e in lift)
        exact = self.exact_solution
        if exact is not None:
            exact = _expr_tuple(exact, self.n, "exact_solution")
            if len(exact) != self.d:
                raise ProblemError(
                    f"exact_solution has {len(exact)} components, expected {self.d}"
                )
        mode = BoundaryMode(self.boundary_mode)
        if mode is not BoundaryMode.ALL_SIDES and self.n != 2:
            raise ProblemError(f"boundary mode {mode.value} requires n = 2")
        object.__setattr__(self, "lift", lift)
        object.__setattr__(self, "lift_grad", lift_grad)
        object.__setattr__(self, "exact_solution", exact)
        object.__setattr__(self, "boundary_mode", mode)

    def with_mode(self, mode: BoundaryMode | str) -> Problem:
        mode = BoundaryMode(mode)
        if mode is self.boundary_mode:
            return self
        return replace(self, boundary_mode=mode)


@dataclass(frozen=True)
class LiftSamples:
    x_cells: np.ndarray  # (n, *cells)
    ubar_cells: np.ndarray  # (d, *cells)
    ubar_grad_cells: tuple[GridFunction, ...]  # n fields, each (d, *cells)
    ubar_nodes: GridFunction


@lru_cache(maxsize=64)
def lift_samples(problem: Problem, grid: UniformGrid) -> LiftSamples:
    if grid.n != problem.n:
        raise ProblemError(f"problem has rank {problem.n}, grid has rank {grid.n}")
    xc = np.array(grid.coordinates(Placement.CELLS))
    xn = grid.coordinates(Placement.NODES)
    cshape = grid.cell_shape

    def sample(e: Expr, coords, shape):
        return np.broadcast_to(e.evaluate(list(coords)), shape)

    ubar_c = np.array([sample(e, xc, cshape) for e in problem.lift])
    grads = tuple(
        GridFunction(
            grid,
            Placement.CELLS,
            np.array([sample(problem.lift_grad[j][i], xc, cshape) for j in range(problem.d)]),
        )
        for i in range(problem.n)
    )
    ubar_n = GridFunction(
        grid,
        Placement.NODES,
        np.array([sample(e, xn, grid.node_shape) for e in problem.lift]),
    )
    xc.setflags(write=False)
    ubar_c.setflags(write=False)
    return LiftSamples(xc, ubar_c, grads, ubar_n)


@dataclass(frozen=True)
class State:
    """Cell-centre samples of ``x``, ``u = ubar + T v`` and ``grad u``."""

    x: np.ndarray
    u: np.ndarray
    z: np.ndarray


def _check_field(problem: Problem, v: GridFunction) -> None:
    if v.placement is not Placement.CELLS:
        raise ProblemError("v must be a cell-placed field")
    if v.grid.n != problem.n:
        raise ProblemError(f"problem has rank {problem.n}, field has rank {v.grid.n}")
    if v.d != problem.d:
        raise ProblemError(f"problem has {problem.d} components, field has {v.d}")


def evaluate_state(problem: Problem, v: GridFunction) -> State:
    _check_field(problem, v)
    anchors = problem.boundary_mode.anchors
    samples = lift_samples(problem, v.grid)
    u = samples.ubar_cells + center_average(full_lift_T(v, anchors=anchors)).values
    grads = lifted_gradient(v, samples.ubar_grad_cells, anchors=anchors)
    z = np.stack([g.values for g in grads], axis=1)
    return State(samples.x_cells, u, z)


def reconstruct_u(problem: Problem, v: GridFunction) -> GridFunction:
    """Node values of ``ubar + T v`` for the problem's boundary mode."""
    _check_field(problem, v)
    lifted = full_lift_T(v, anchors=problem.boundary_mode.anchors)
    return lift_samples(problem, v.grid).ubar_nodes + lifted


def check_finite(values: np.ndarray, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        index = tuple(int(i) for i in np.argwhere(bad)[0])
        raise EvaluationError(what, index)
    return values


def evaluate_functional(problem: Problem, v: GridFunction) -> float:
    """Midpoint-rule value of ``I(ubar + T v)``."""
    st = evaluate_state(problem, v)
    f = np.broadcast_to(problem.lagrangian.value(st.x, st.u, st.z), v.shape)
    f = check_finite(f, "Lagrangian value")
    return float(np.sum(f) * v.grid.cell_volume)


# -- built-in problems -------------------------------------------------------


def _half_sq(z):
    return 0.5 * np.sum(z * z, axis=(0, 1))


def _sin_product(n: int) -> str:
    return "*".join(f"sin(pi*x{i + 1})" for i in range(n))


def _source(params, key, default, n) -> Expr:
    try:
        return as_expression(params.get(key, default), n)
    except ExpressionError as exc:
        raise ProblemError(f"{key}: {exc}") from exc


def _dirichlet(params, n, mode):
    lag = Lagrangian(
        value=lambda x, u, z: _half_sq(z),
        du=lambda x, u, z: np.zeros_like(u),
        dz=lambda x, u, z: z,
    )
    exact = ("0",) if "lift" not in params else None
    return dict(d=1, lagrangian=lag, exact=exact)


def _poisson(params, n, mode, nonlinear=False):
    s = _sin_product(n)
    default_g = f"{n}*pi^2*{s}" + (f" + ({s})^3" if nonlinear else "")
    g = _source(params, "g", default_g, n)
    default = "g" not in params and "lift" not in params

    def g_at(x):
        return g.evaluate(list(x))

    if nonlinear:
        lag = Lagrangian(
            value=lambda x, u, z: _half_sq(z) + 0.25 * u[0] ** 4 - g_at(x) * u[0],
            du=lambda x, u, z: (u[0] ** 3 - g_at(x))[np.newaxis] + 0.0 * u,
            dz=lambda x, u, z: z,
        )
    else:
        lag = Lagrangian(
            value=lambda x, u, z: _half_sq(z) - g_at(x) * u[0],
            du=lambda x, u, z: -np.broadcast_to(g_at(x), u.shape[1:])[np.newaxis] + 0.0 * u,
            dz=lambda x, u, z: z,
        )
    return dict(d=1, lagrangian=lag, exact=(s,) if default else None, data={"g": g})


def _coupled_vector(params, n, mode):
    lag = Lagrangian(
        value=lambda x, u, z: _half_sq(z) + u[0] * u[1],
        du=lambda x, u, z: np.stack([u[1], u[0]]),
        dz=lambda x, u, z: z,
    )
    exact = ("0", "0") if "lift" not in params else None
    return dict(d=2, lagrangian=lag, exact=exact)


_REGISTRY: dict[str, Callable[..., dict]] = {
    "dirichlet": _dirichlet,
    "poisson": _poisson,
    "nonlinear_poisson": lambda p, n, m: _poisson(p, n, m, nonlinear=True),
    "coupled_vector": _coupled_vector,
}

_PARAM_KEYS = {"g", "lift", "lift_grad", "exact"}


def register_problem(name: str, factory: Callable[..., dict]) -> None:
    """Register a problem factory ``factory(params, n, mode) -> dict``.

    The returned mapping holds ``d``, ``lagrangian`` and optionally ``exact``
    and ``data``; ``lift``/``lift_grad``/``exact`` parameters are applied on
    top by :func:`builtin_problem`.
    """
    _REGISTRY[name] = factory


def list_problems() -> list[str]:
    return sorted(_REGISTRY)


def builtin_problem(
    name: str,
    params: Mapping[str, Any] | None = None,
    n: int = 2,
    boundary_mode: BoundaryMode | str = BoundaryMode.ALL_SIDES,
) -> Problem:
    """Build a registered problem.

    ``params`` may hold ``g`` (source expression, Poisson variants),
    ``lift`` (expression per component), ``lift_grad`` (``d`` rows of ``n``
    expressions) and ``exact`` (expression per component).
    """
    if name not in _REGISTRY:
        raise ProblemError(f"unknown problem {name!r}; known: {', '.join(list_problems())}")
    params = dict(params or {})
    unknown = set(params) - _PARAM_KEYS
    if unknown:
        raise ProblemError(f"unknown parameter(s) {sorted(unknown)} for {name!r}")
    try:
        mode = BoundaryMode(boundary_mode)
    except ValueError as exc:
        raise ProblemError(f"unknown boundary mode {boundary_mode!r}") from exc
    spec = _REGISTRY[name](params, n, mode)
    exact = params.get("exact", spec.get("exact"))
    return Problem(
        n=n,
        d=spec["d"],
        lagrangian=spec["lagrangian"],
        lift=params.get("lift", ()),
        lift_grad=params.get("lift_grad", ()),
        exact_solution=exact,
        boundary_mode=mode,
        name=name,
        data=spec.get("data", {}),
    )


def custom_problem(
    n: int,
    value: Callable,
    du: Callable,
    dz: Callable,
    d: int = 1,
    **kwargs,
) -> Problem:
    """Shorthand for a problem built from three vectorised callables."""
    return Problem(n=n, d=d, lagrangian=Lagrangian(value, du, dz), **kwargs)

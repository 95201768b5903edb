"""Brute-force reference computations used by the tests.

Nothing in the main solver path imports this module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse

from .expressions import Expr, as_expression
from .grid import GridError, GridFunction, Placement, sample_expression
from .problems import Problem, evaluate_functional

MAX_ORACLE_CELLS_PER_AXIS = 33


@dataclass(frozen=True)
class ErrorSummary:
    l2_error: float
    max_error: float
    h: float


def fd_directional_derivative(
    problem: Problem, v: GridFunction, h: GridFunction, eps: float = 1e-5
) -> float:
    """Central difference ``(F(v + eps h) - F(v - eps h)) / (2 eps)``."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    fp = evaluate_functional(problem, v + h * eps)
    fm = evaluate_functional(problem, v - h * eps)
    return (fp - fm) / (2.0 * eps)


def fd_sweep(
    problem: Problem,
    v: GridFunction,
    h: GridFunction,
    analytic: float,
    eps_values: Sequence[float] = (1e-4, 1e-5, 1e-6),
) -> list[tuple[float, float, float]]:
    """``(eps, fd, relative error)`` rows for each step size.

    The relative error is measured against ``max(|analytic|, |fd|)`` and is
    0 when both vanish.
    """
    rows = []
    for eps in eps_values:
        fd = fd_directional_derivative(problem, v, h, eps)
        scale = max(abs(analytic), abs(fd))
        rel = abs(fd - analytic) / scale if scale > 0 else 0.0
        rows.append((eps, fd, rel))
    return rows


def slab_constraint_matrix(shape: Sequence[int]) -> scipy.sparse.csr_matrix:
    """Rows sum a cell array along one axis at a fixed position on the others.

    Spacing factors are dropped because they do not change the null space.
    """
    shape = tuple(int(s) for s in shape)
    size = int(np.prod(shape))
    idx = np.arange(size).reshape(shape)
    blocks = []
    for i in range(len(shape)):
        # each line along axis i becomes one row
        lines = np.moveaxis(idx, i, -1).reshape(-1, shape[i])
        rows = np.repeat(np.arange(lines.shape[0]), shape[i])
        blocks.append(
            scipy.sparse.csr_matrix(
                (np.ones(lines.size), (rows, lines.ravel())),
                shape=(lines.shape[0], size),
            )
        )
    return scipy.sparse.vstack(blocks).tocsr()


def projection_oracle(v: GridFunction) -> GridFunction:
    """Least-squares projection onto the slab-constraint null space.

    Solves the normal equations ``C C^T y = C v`` with a rank-revealing
    least-squares driver (the system is singular because slab sums over
    different axes share totals) and returns ``v - C^T y``.
    """
    if v.placement is not Placement.CELLS:
        raise GridError("projection_oracle expects a cell-placed field")
    shape = v.grid.cell_shape
    if max(shape) > MAX_ORACLE_CELLS_PER_AXIS:
        raise GridError(
            f"oracle grid capped at {MAX_ORACLE_CELLS_PER_AXIS} cells per axis, got {shape}"
        )
    C = slab_constraint_matrix(shape)
    CCt = (C @ C.T).toarray()
    out = np.empty_like(v.values)
    for j in range(v.d):
        x = v.values[j].ravel()
        y, _, rank, _ = scipy.linalg.lstsq(CCt, C @ x, lapack_driver="gelsy")
        assert rank > 0
        out[j] = (x - C.T @ y).reshape(shape)
    return v.with_values(out)


def _exact_list(exact, n: int, d: int) -> list[Expr]:
    if isinstance(exact, (str, Expr)):
        exact = [exact]
    exprs = [as_expression(e, n) for e in exact]
    if len(exprs) != d:
        raise ValueError(f"need {d} exact expressions, got {len(exprs)}")
    return exprs


def error_vs_exact(u: GridFunction, exact) -> ErrorSummary:
    """Trapezoid L2 and max-norm node errors against analytic components."""
    if u.placement is not Placement.NODES:
        raise GridError("error_vs_exact expects a node-placed field")
    grid = u.grid
    ref = sample_expression(_exact_list(exact, grid.n, u.d), grid, Placement.NODES)
    diff = (u - ref).values
    l2 = float(np.sqrt(np.sum(diff**2 * grid.node_weights)))
    return ErrorSummary(l2, float(np.max(np.abs(diff))), float(max(grid.spacing)))


def convergence_order(errors: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of ``log(error)`` against ``log(h)``."""
    errors = list(errors)
    if len(errors) < 3:
        raise ValueError(f"need at least 3 grid levels, got {len(errors)}")
    h, e = np.asarray(errors, dtype=float).T
    if np.any(h <= 0) or np.any(e <= 0):
        raise ValueError("spacings and errors must be positive")
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)

"""Integral and differential operators on the staggered grid.

The discrete lift is a cumulative midpoint sum from cell centres to nodes,
and the discrete mixed derivative is a product of normalised forward
differences from nodes back to cell centres.  The pair is an exact inverse
on every cell field, which makes the lift an isometry from the cell space
onto the node space normed by the mixed derivative.

A per-axis ``anchor`` selects where a cumulative integral starts.  With
``"lower"`` the node value at ``k`` is ``h * sum_{j<k} v_j`` (it vanishes on
the face ``x_i = a_i``).  With ``"upper"`` it is ``-h * sum_{j>=k} v_j`` (it
vanishes on ``x_i = b_i``); the sign keeps the forward difference equal to
``v`` in both cases.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import (
    GridError,
    GridFunction,
    MultiIndex,
    Placement,
    inner_product_l2,
    multi_indices,
)

LOWER = "lower"
UPPER = "upper"


def _check_axis(f: GridFunction, i: int) -> None:
    if not 0 <= i < f.grid.n:
        raise GridError(f"axis {i} out of range for rank {f.grid.n}")


def _anchors(anchors, n: int) -> tuple[str, ...]:
    if anchors is None:
        return (LOWER,) * n
    anchors = tuple(anchors)
    if len(anchors) != n or any(a not in (LOWER, UPPER) for a in anchors):
        raise GridError(f"anchors must be {n} entries of 'lower'/'upper'")
    return anchors


def _pad(arr: np.ndarray, axis: int, where: str) -> np.ndarray:
    zshape = list(arr.shape)
    zshape[axis] = 1
    zero = np.zeros(zshape)
    parts = [zero, arr] if where == "front" else [arr, zero]
    return np.concatenate(parts, axis=axis)


def _rcumsum(arr: np.ndarray, axis: int) -> np.ndarray:
    return np.flip(np.cumsum(np.flip(arr, axis), axis=axis), axis)


def cumulative_integral_axis(
    v: GridFunction, i: int, anchor: str = LOWER
) -> GridFunction:
    """Integrate a field along axis ``i`` from cell centres onto nodes."""
    _check_axis(v, i)
    if v.nodal[i]:
        raise GridError(f"field must be cell-placed along axis {i}")
    h = v.grid.spacing[i]
    ax = i + 1
    if anchor == LOWER:
        out = h * _pad(np.cumsum(v.values, axis=ax), ax, "front")
    elif anchor == UPPER:
        out = -h * _pad(_rcumsum(v.values, ax), ax, "back")
    else:
        raise GridError(f"unknown anchor {anchor!r}")
    nodal = tuple(True if k == i else nd for k, nd in enumerate(v.nodal))
    return GridFunction(v.grid, nodal, out)


def full_lift_T(
    v: GridFunction,
    order: Sequence[int] | None = None,
    anchors: Sequence[str] | None = None,
) -> GridFunction:
    """Apply the cumulative integral along every axis (cells -> nodes).

    ``order`` permutes the axis sequence; the result does not depend on it
    beyond rounding.
    """
    if v.placement is not Placement.CELLS:
        raise GridError("full_lift_T expects a cell-placed field")
    n = v.grid.n
    anchors = _anchors(anchors, n)
    order = range(n) if order is None else order
    if sorted(order) != list(range(n)):
        raise GridError(f"order must be a permutation of 0..{n - 1}")
    u = v
    for i in order:
        u = cumulative_integral_axis(u, i, anchors[i])
    return u


def reversed_cumulative_axis(w: GridFunction, i: int) -> GridFunction:
    """Tail integral from each cell centre to ``b_i`` along axis ``i``.

    The originating cell contributes half its width, cells beyond it their
    full width.
    """
    _check_axis(w, i)
    if w.nodal[i]:
        raise GridError(f"field must be cell-placed along axis {i}")
    ax = i + 1
    h = w.grid.spacing[i]
    return w.with_values(h * (_rcumsum(w.values, ax) - 0.5 * w.values))


def _head_cumulative_axis(w: GridFunction, i: int) -> GridFunction:
    ax = i + 1
    h = w.grid.spacing[i]
    return w.with_values(h * (np.cumsum(w.values, axis=ax) - 0.5 * w.values))


def lift_adjoint_axes(
    w: GridFunction, axes: Sequence[int], anchors: Sequence[str] | None = None
) -> GridFunction:
    """Adjoint of (cumulative integral along ``axes`` then centre averaging).

    For a lower anchor this is the half-weighted tail integral; for an
    upper anchor it is the negated half-weighted head integral.
    """
    anchors = _anchors(anchors, w.grid.n)
    for i in axes:
        if anchors[i] == LOWER:
            w = reversed_cumulative_axis(w, i)
        else:
            w = -_head_cumulative_axis(w, i)
    return w


def center_average(u: GridFunction, axes: Sequence[int] | None = None) -> GridFunction:
    """Average adjacent node values along ``axes`` (default: every nodal axis)."""
    if axes is None:
        axes = [i for i, nd in enumerate(u.nodal) if nd]
    vals = u.values
    nodal = list(u.nodal)
    for i in axes:
        if not nodal[i]:
            raise GridError(f"field is not node-placed along axis {i}")
        ax = i + 1
        n_i = vals.shape[ax]
        lo = np.take(vals, np.arange(n_i - 1), axis=ax)
        hi = np.take(vals, np.arange(1, n_i), axis=ax)
        vals = 0.5 * (lo + hi)
        nodal[i] = False
    return GridFunction(u.grid, nodal, vals)


def slab_integral(v: GridFunction, alpha: MultiIndex) -> GridFunction:
    """Midpoint integral over every axis selected by ``alpha``.

    The result is constant along those axes and is stored broadcast on the
    original grid.
    """
    if alpha.n != v.grid.n:
        raise GridError(f"multi-index has {alpha.n} entries, grid rank {v.grid.n}")
    if alpha.order == 0:
        raise GridError("slab integral needs at least one selected axis")
    vals = v.values
    scale = 1.0
    for i in alpha.axes:
        if v.nodal[i]:
            raise GridError(f"field must be cell-placed along axis {i}")
        scale *= v.grid.spacing[i]
    summed = np.sum(vals, axis=tuple(i + 1 for i in alpha.axes), keepdims=True)
    return v.with_values(np.broadcast_to(scale * summed, vals.shape))


def project_kernel(v: GridFunction, axes: Sequence[int] | None = None) -> GridFunction:
    """Orthogonal projection onto the fields whose slab integrals vanish.

    Only the axes listed in ``axes`` are constrained (default: all).  Uses
    the signed sum of scaled slab integrals over every nonempty subset of
    the constrained axes.
    """
    n = v.grid.n
    axes = tuple(range(n)) if axes is None else tuple(sorted(set(axes)))
    if v.placement is not Placement.CELLS:
        raise GridError("projection expects a cell-placed field")
    lengths = v.grid.domain.lengths
    out = v.values.copy()
    for alpha in multi_indices(n):
        if alpha.order == 0 or not set(alpha.axes) <= set(axes):
            continue
        c_alpha = 1.0
        for i in alpha.axes:
            c_alpha /= lengths[i]
        sign = -1.0 if alpha.order % 2 else 1.0
        out += sign * c_alpha * slab_integral(v, alpha).values
    return v.with_values(out)


def project_L0(v: GridFunction) -> GridFunction:
    """Orthogonal L2 projection onto the discrete zero-slab subspace."""
    return project_kernel(v)


def mixed_derivative(u: GridFunction) -> GridFunction:
    """Forward difference divided by the spacing along every axis (nodes -> cells)."""
    if u.placement is not Placement.NODES:
        raise GridError("mixed_derivative expects a node-placed field")
    vals = u.values
    for i, h in enumerate(u.grid.spacing):
        vals = np.diff(vals, axis=i + 1) / h
    return GridFunction(u.grid, Placement.CELLS, vals)


def lifted_gradient(
    v: GridFunction,
    ubar_grad: Sequence[GridFunction] | None = None,
    anchors: Sequence[str] | None = None,
) -> list[GridFunction]:
    """Cell-centre partial derivatives of the lifted field ``T v``.

    The derivative along axis ``i`` integrates ``v`` over every other axis
    and averages the resulting node values to cell centres.
    """
    if v.placement is not Placement.CELLS:
        raise GridError("lifted_gradient expects a cell-placed field")
    n = v.grid.n
    anchors = _anchors(anchors, n)
    if ubar_grad is not None and len(ubar_grad) != n:
        raise GridError(f"ubar_grad needs {n} entries, got {len(ubar_grad)}")
    grads = []
    for i in range(n):
        w = v
        others = [k for k in range(n) if k != i]
        for k in others:
            w = cumulative_integral_axis(w, k, anchors[k])
        w = center_average(w, others)
        if ubar_grad is not None:
            g = ubar_grad[i]
            if g.placement is not Placement.CELLS:
                raise GridError("ubar_grad entries must be cell-placed")
            w = w + g
        grads.append(w)
    return grads


def m0_norm(u: GridFunction) -> float:
    """Norm of a node field measured by its mixed derivative."""
    du = mixed_derivative(u)
    return float(np.sqrt(max(inner_product_l2(du, du), 0.0)))


@dataclass(frozen=True)
class L0Certificate:
    max_slab_residual: float
    tolerance: float
    axis_residuals: tuple[float, ...] = ()

    @property
    def passed(self) -> bool:
        return self.max_slab_residual <= self.tolerance

    def __bool__(self) -> bool:
        return self.passed


def slab_residuals(v: GridFunction, axes: Sequence[int] | None = None) -> tuple[float, ...]:
    n = v.grid.n
    axes = range(n) if axes is None else axes
    return tuple(
        float(np.max(np.abs(slab_integral(v, MultiIndex.axis(i, n)).values)))
        for i in axes
    )


def certify_L0(v: GridFunction, tol: float) -> L0Certificate:
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    res = slab_residuals(v)
    return L0Certificate(max(res), float(tol), res)

"""Box domains, staggered uniform grids and grid-sampled fields.

The unknown ``u`` lives on the node grid and the transformed variable ``v``
on the cell-centre grid.  Field values are stored component-first: a field
with ``d`` components on a grid with cell counts ``(N1, ..., Nn)`` has a
``values`` array of shape ``(d, N1[+1], ..., Nn[+1])`` where array axis
``k + 1`` corresponds to the coordinate ``x_{k+1}``.  Flattened exports
(CSV files) enumerate points with ``x1`` varying fastest.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .expressions import as_expression

MAX_RANK = 4


class GridError(ValueError):
    """Invalid domain, grid, or field construction."""


class Placement(enum.Enum):
    NODES = "nodes"
    CELLS = "cells"
    MIXED = "mixed"


@dataclass(frozen=True)
class BoxDomain:
    """The open box ``prod_i (lower[i], upper[i])``."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __init__(self, lower: Sequence[float], upper: Sequence[float]):
        lower = tuple(float(a) for a in lower)
        upper = tuple(float(b) for b in upper)
        if len(lower) != len(upper):
            raise GridError(
                f"lower has {len(lower)} entries but upper has {len(upper)}"
            )
        if not 1 <= len(lower) <= MAX_RANK:
            raise GridError(f"rank must be in 1..{MAX_RANK}, got {len(lower)}")
        for i, (a, b) in enumerate(zip(lower, upper)):
            if not (np.isfinite(a) and np.isfinite(b)) or not a < b:
                raise GridError(f"axis {i + 1}: need finite a < b, got ({a}, {b})")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def unit(cls, n: int) -> BoxDomain:
        return cls([0.0] * n, [1.0] * n)

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.lower, self.upper))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))


@dataclass(frozen=True)
class UniformGrid:
    """Uniform tensor grid over a box with ``cells[i]`` intervals on axis ``i``."""

    domain: BoxDomain
    cells: tuple[int, ...]
    spacing: tuple[float, ...] = field(init=False, compare=False)

    def __post_init__(self):
        cells = tuple(int(c) for c in self.cells)
        if len(cells) != self.domain.n:
            raise GridError(
                f"domain has rank {self.domain.n} but cells has {len(cells)} entries"
            )
        if min(cells) < 1:
            raise GridError(f"every axis needs at least one cell, got {cells}")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(
            self,
            "spacing",
            tuple(length / c for length, c in zip(self.domain.lengths, cells)),
        )

    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def node_shape(self) -> tuple[int, ...]:
        return tuple(c + 1 for c in self.cells)

    @property
    def cell_shape(self) -> tuple[int, ...]:
        return self.cells

    def shape(self, nodal: Sequence[bool]) -> tuple[int, ...]:
        return tuple(c + 1 if nd else c for c, nd in zip(self.cells, nodal))

    def node_axis(self, i: int) -> np.ndarray:
        a = self.domain.lower[i]
        return a + np.arange(self.cells[i] + 1) * self.spacing[i]

    def cell_axis(self, i: int) -> np.ndarray:
        a = self.domain.lower[i]
        return a + (np.arange(self.cells[i]) + 0.5) * self.spacing[i]

    def axes(self, nodal: Sequence[bool]) -> list[np.ndarray]:
        return [
            self.node_axis(i) if nd else self.cell_axis(i)
            for i, nd in enumerate(nodal)
        ]

    def coordinates(self, placement: Placement | Sequence[bool]) -> list[np.ndarray]:
        """Coordinate arrays ``[x1, ..., xn]`` broadcast to the full point shape."""
        nodal = _as_nodal(placement, self.n)
        return np.meshgrid(*self.axes(nodal), indexing="ij")

    @cached_property
    def node_weights(self) -> np.ndarray:
        """Tensor trapezoid weights on the node grid (sum equals the volume)."""
        w = np.ones(self.node_shape)
        for i, h in enumerate(self.spacing):
            wi = np.full(self.cells[i] + 1, h)
            wi[0] = wi[-1] = 0.5 * h
            w = w * wi.reshape([-1 if k == i else 1 for k in range(self.n)])
        w.setflags(write=False)
        return w

    def boundary_mask(self) -> np.ndarray:
        """Boolean node array marking every node on the box boundary."""
        mask = np.zeros(self.node_shape, dtype=bool)
        for i in range(self.n):
            mask[_face(i, 0, self.n)] = True
            mask[_face(i, -1, self.n)] = True
        return mask

    def face_mask(self, axis: int, side: str) -> np.ndarray:
        """Node mask of the face ``x_axis = a`` (side ``"lower"``) or ``= b``."""
        mask = np.zeros(self.node_shape, dtype=bool)
        mask[_face(axis, 0 if side == "lower" else -1, self.n)] = True
        return mask


def _face(axis: int, index: int, n: int) -> tuple:
    return tuple(index if k == axis else slice(None) for k in range(n))


def build_grid(domain: BoxDomain, cells: Sequence[int]) -> UniformGrid:
    """Build the staggered grid, requiring at least two cells per axis."""
    cells = list(cells)
    if len(cells) != domain.n:
        raise GridError(
            f"domain has rank {domain.n} but cells has {len(cells)} entries"
        )
    for i, c in enumerate(cells):
        if int(c) != c or c < 2:
            raise GridError(f"cells[{i}] must be an integer >= 2, got {c}")
    return UniformGrid(domain, tuple(int(c) for c in cells))


def _as_nodal(placement: Placement | Sequence[bool], n: int) -> tuple[bool, ...]:
    if placement is Placement.NODES:
        return (True,) * n
    if placement is Placement.CELLS:
        return (False,) * n
    if isinstance(placement, Placement):
        raise GridError("mixed placement needs an explicit per-axis pattern")
    nodal = tuple(bool(p) for p in placement)
    if len(nodal) != n:
        raise GridError(f"placement pattern has {len(nodal)} axes, grid has {n}")
    return nodal


class GridFunction:
    """Immutable ``d``-component field sampled on a grid.

    ``nodal[i]`` tells whether the field sits on nodes (True) or cell
    centres (False) along axis ``i``; all-True is node placement, all-False
    cell placement, anything else is a mixed field produced by partial
    integration.
    """

    __slots__ = ("grid", "nodal", "values")

    def __init__(self, grid: UniformGrid, placement, values):
        nodal = _as_nodal(placement, grid.n)
        values = np.array(values, dtype=float)
        shape = grid.shape(nodal)
        if values.shape == shape:
            values = values[np.newaxis]
        if values.ndim != grid.n + 1 or values.shape[1:] != shape:
            raise GridError(
                f"values of shape {values.shape} do not fit point shape {shape}"
            )
        if values.shape[0] < 1:
            raise GridError("a field needs at least one component")
        if not np.all(np.isfinite(values)):
            raise GridError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "nodal", nodal)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    @classmethod
    def zeros(cls, grid: UniformGrid, placement, d: int = 1) -> GridFunction:
        nodal = _as_nodal(placement, grid.n)
        return cls(grid, nodal, np.zeros((d,) + grid.shape(nodal)))

    @classmethod
    def full(cls, grid: UniformGrid, placement, value: float, d: int = 1) -> GridFunction:
        nodal = _as_nodal(placement, grid.n)
        return cls(grid, nodal, np.full((d,) + grid.shape(nodal), float(value)))

    @property
    def placement(self) -> Placement:
        if all(self.nodal):
            return Placement.NODES
        if not any(self.nodal):
            return Placement.CELLS
        return Placement.MIXED

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape[1:]

    def with_values(self, values) -> GridFunction:
        return GridFunction(self.grid, self.nodal, values)

    def component(self, j: int) -> GridFunction:
        return GridFunction(self.grid, self.nodal, self.values[j : j + 1])

    def coordinates(self) -> list[np.ndarray]:
        return self.grid.coordinates(self.nodal)

    def flat(self) -> np.ndarray:
        """Point-major ``(points, d)`` array with ``x1`` varying fastest."""
        n = self.grid.n
        perm = (0,) + tuple(range(n, 0, -1))
        return self.values.transpose(perm).reshape(self.d, -1).T.copy()

    @classmethod
    def from_flat(cls, grid: UniformGrid, placement, data) -> GridFunction:
        nodal = _as_nodal(placement, grid.n)
        shape = grid.shape(nodal)
        data = np.asarray(data, dtype=float)
        if data.ndim == 1:
            data = data[:, np.newaxis]
        npts = int(np.prod(shape))
        if data.shape[0] != npts:
            raise GridError(f"expected {npts} points, got {data.shape[0]}")
        d = data.shape[1]
        rev = data.T.reshape((d,) + shape[::-1])
        n = grid.n
        return cls(grid, nodal, rev.transpose((0,) + tuple(range(n, 0, -1))))

    def _check_compatible(self, other: GridFunction) -> None:
        if not isinstance(other, GridFunction):
            raise TypeError(f"expected GridFunction, got {type(other).__name__}")
        if other.grid != self.grid or other.nodal != self.nodal:
            raise GridError("fields live on different grids or placements")
        if other.d != self.d:
            raise GridError(f"component counts differ: {self.d} vs {other.d}")

    def __add__(self, other: GridFunction) -> GridFunction:
        self._check_compatible(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: GridFunction) -> GridFunction:
        self._check_compatible(other)
        return self.with_values(self.values - other.values)

    def __neg__(self) -> GridFunction:
        return self.with_values(-self.values)

    def __mul__(self, scalar: float) -> GridFunction:
        return self.with_values(float(scalar) * self.values)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> GridFunction:
        return self.with_values(self.values / float(scalar))

    def __repr__(self) -> str:
        return (
            f"GridFunction(placement={self.placement.value}, d={self.d}, "
            f"shape={self.shape})"
        )


@dataclass(frozen=True)
class MultiIndex:
    """Binary multi-index selecting a subset of axes."""

    bits: tuple[bool, ...]

    def __init__(self, bits: Sequence[bool | int]):
        object.__setattr__(self, "bits", tuple(bool(b) for b in bits))

    @classmethod
    def axis(cls, i: int, n: int) -> MultiIndex:
        return cls([k == i for k in range(n)])

    @property
    def n(self) -> int:
        return len(self.bits)

    @property
    def order(self) -> int:
        return sum(self.bits)

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b)

    def complement(self) -> MultiIndex:
        return MultiIndex([not b for b in self.bits])


def multi_indices(n: int, k: int | None = None) -> Iterator[MultiIndex]:
    """All binary multi-indices of length ``n`` (of order ``k`` if given)."""
    for bits in itertools.product((False, True), repeat=n):
        if k is None or sum(bits) == k:
            yield MultiIndex(bits)


def inner_product_l2(f: GridFunction, g: GridFunction) -> float:
    """Discrete L2 inner product summed over components.

    Cell fields use the midpoint rule and node fields the tensor trapezoid
    rule.  The sum is exactly rounded, so it is independent of memory
    layout and thread count.
    """
    f._check_compatible(g)
    prod = f.values * g.values
    if f.placement is Placement.CELLS:
        return math.fsum(prod.ravel().tolist()) * f.grid.cell_volume
    if f.placement is Placement.NODES:
        return math.fsum((prod * f.grid.node_weights).ravel().tolist())
    raise GridError("inner product is defined for node or cell placement only")


def norm_l2(f: GridFunction) -> float:
    return float(np.sqrt(max(inner_product_l2(f, f), 0.0)))


def sample_expression(expr, grid: UniformGrid, placement) -> GridFunction:
    """Evaluate one expression (or a sequence, one per component) pointwise."""
    exprs = list(expr) if isinstance(expr, (list, tuple)) else [expr]
    nodal = _as_nodal(placement, grid.n)
    coords = grid.coordinates(nodal)
    shape = grid.shape(nodal)
    values = np.empty((len(exprs),) + shape)
    for j, e in enumerate(exprs):
        e = as_expression(e, grid.n)
        values[j] = np.broadcast_to(e.evaluate(coords), shape)
    return GridFunction(grid, nodal, values)

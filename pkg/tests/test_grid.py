import math

import numpy as np
import pytest

from varidescent import (
    BoxDomain,
    GridError,
    GridFunction,
    MultiIndex,
    Placement,
    build_grid,
    inner_product_l2,
    multi_indices,
    norm_l2,
    sample_expression,
)

from .conftest import random_cells
from .frozen_values import INT_SIN2_UNIT


def test_build_grid_unit_square():
    g = build_grid(BoxDomain.unit(2), [4, 4])
    assert g.spacing == (0.25, 0.25)
    assert np.prod(g.node_shape) == 25
    assert np.prod(g.cell_shape) == 16


def test_build_grid_rectangle_spacing():
    g = build_grid(BoxDomain([0, 0], [1, 2]), [2, 4])
    assert g.spacing == (0.5, 0.5)


def test_build_grid_rejects_single_cell():
    with pytest.raises(GridError):
        build_grid(BoxDomain.unit(2), [1, 4])


def test_build_grid_rank_mismatch():
    with pytest.raises(GridError):
        build_grid(BoxDomain.unit(2), [4, 4, 4])


@pytest.mark.parametrize(
    "lower, upper",
    [([0, 0], [1]), ([1, 0], [0, 1]), ([], []), ([0] * 5, [1] * 5)],
)
def test_box_domain_validation(lower, upper):
    with pytest.raises(GridError):
        BoxDomain(lower, upper)


def test_node_and_cell_coordinates():
    g = build_grid(BoxDomain([1.0], [2.0]), [4])
    np.testing.assert_allclose(g.node_axis(0), [1.0, 1.25, 1.5, 1.75, 2.0])
    np.testing.assert_allclose(g.cell_axis(0), [1.125, 1.375, 1.625, 1.875])


def test_inner_product_of_ones_is_volume():
    g = build_grid(BoxDomain.unit(2), [8, 8])
    one = GridFunction.full(g, Placement.CELLS, 1.0)
    assert inner_product_l2(one, one) == pytest.approx(1.0, abs=1e-15)


def test_inner_product_odd_reflection_vanishes(rng):
    g = build_grid(BoxDomain([0, 0], [2, 1]), [10, 6])
    v = rng.standard_normal((1, *g.cell_shape))
    odd = GridFunction(g, Placement.CELLS, v - v[:, ::-1, ::-1])
    one = GridFunction.full(g, Placement.CELLS, 1.0)
    assert abs(inner_product_l2(one, odd)) < 1e-14


def test_inner_product_sin_squared():
    g = build_grid(BoxDomain.unit(1), [64])
    s = sample_expression("sin(pi*x1)", g, Placement.CELLS)
    assert inner_product_l2(s, s) == pytest.approx(INT_SIN2_UNIT, abs=1e-3)


def test_inner_product_nodes_uses_trapezoid():
    g = build_grid(BoxDomain.unit(1), [4])
    x = sample_expression("x1", g, Placement.NODES)
    one = GridFunction.full(g, Placement.NODES, 1.0)
    # trapezoid is exact for linear integrands
    assert inner_product_l2(x, one) == pytest.approx(0.5, abs=1e-15)


def test_inner_product_rejects_mismatch(unit2):
    a = GridFunction.zeros(unit2, Placement.CELLS)
    b = GridFunction.zeros(unit2, Placement.NODES)
    with pytest.raises(GridError):
        inner_product_l2(a, b)
    with pytest.raises(GridError):
        inner_product_l2(a, GridFunction.zeros(unit2, Placement.CELLS, d=2))


def test_inner_product_symmetric_bilinear(unit2, rng):
    f, g, h = (random_cells(unit2, rng) for _ in range(3))
    assert inner_product_l2(f, g) == inner_product_l2(g, f)
    lhs = inner_product_l2(f * 2.5 + h, g)
    rhs = 2.5 * inner_product_l2(f, g) + inner_product_l2(h, g)
    assert lhs == pytest.approx(rhs, rel=1e-13, abs=1e-14)


def test_norm_positive_definite(unit2, rng):
    assert norm_l2(GridFunction.zeros(unit2, Placement.CELLS)) == 0.0
    assert norm_l2(random_cells(unit2, rng)) > 0.0


def test_midpoint_exact_on_multilinear():
    g = build_grid(BoxDomain([0, -1], [2, 3]), [5, 7])
    f = sample_expression("1 + 3*x1 - 2*x2 + x1*x2", g, Placement.CELLS)
    one = GridFunction.full(g, Placement.CELLS, 1.0)
    # exact integral over (0,2)x(-1,3): 8 + 3*8 - 2*8 + 8 = 24
    assert inner_product_l2(f, one) == pytest.approx(24.0, rel=1e-12)


def test_sample_zero_and_identity():
    g = build_grid(BoxDomain.unit(1), [2])
    assert np.all(sample_expression("0", g, Placement.CELLS).values == 0.0)
    np.testing.assert_array_equal(sample_expression("x1", g, Placement.NODES).values[0], [0, 0.5, 1])


def test_sample_matches_math_module(rng):
    g = build_grid(BoxDomain.unit(2), [7, 5])
    f = sample_expression("sin(pi*x1)*sin(pi*x2)", g, Placement.NODES)
    xs, ys = g.coordinates(Placement.NODES)
    for _ in range(5):
        i, j = rng.integers(0, 8), rng.integers(0, 6)
        ref = math.sin(math.pi * xs[i, j]) * math.sin(math.pi * ys[i, j])
        assert abs(f.values[0, i, j] - ref) <= 1e-15


def test_sample_unknown_variable():
    g = build_grid(BoxDomain.unit(2), [4, 4])
    with pytest.raises(ValueError):
        sample_expression("x3", g, Placement.CELLS)


def test_grid_function_rejects_non_finite(unit2):
    vals = np.zeros((1, *unit2.cell_shape))
    vals[0, 3, 3] = np.nan
    with pytest.raises(GridError):
        GridFunction(unit2, Placement.CELLS, vals)


def test_grid_function_is_immutable(unit2):
    f = GridFunction.zeros(unit2, Placement.CELLS)
    with pytest.raises(ValueError):
        f.values[0, 0, 0] = 1.0


def test_flat_layout_x1_fastest():
    g = build_grid(BoxDomain.unit(2), [2, 3])
    f = sample_expression(["x1", "x2"], g, Placement.CELLS)
    flat = f.flat()
    assert flat.shape == (6, 2)
    np.testing.assert_allclose(flat[:3, 0], [0.25, 0.75, 0.25])
    np.testing.assert_allclose(flat[:3, 1], [1 / 6, 1 / 6, 0.5])
    back = GridFunction.from_flat(g, Placement.CELLS, flat)
    np.testing.assert_array_equal(back.values, f.values)


def test_multi_index_complement():
    alphas = list(multi_indices(3))
    assert len(alphas) == 8
    for a in alphas:
        c = a.complement()
        assert all(x + y == 1 for x, y in zip(a.bits, c.bits))
        assert a.order + c.order == 3
    assert len(list(multi_indices(3, 2))) == 3
    assert MultiIndex.axis(1, 3).axes == (1,)

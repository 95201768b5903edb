import numpy as np
import pytest

from varidescent import (
    BoundaryMode,
    BoxDomain,
    EvaluationError,
    GridFunction,
    Placement,
    ProblemError,
    build_grid,
    builtin_problem,
    custom_problem,
    evaluate_functional,
    list_problems,
    mixed_derivative,
    parse_expression,
    reconstruct_u,
    sample_expression,
)

from .conftest import random_cells
from .frozen_values import POISSON_EXACT_ENERGY


def constant_lagrangian(n=2):
    return custom_problem(
        n,
        value=lambda x, u, z: np.ones(u.shape[1:]),
        du=lambda x, u, z: np.zeros_like(u),
        dz=lambda x, u, z: np.zeros_like(z),
    )


def test_registry_names():
    assert list_problems() == ["coupled_vector", "dirichlet", "nonlinear_poisson", "poisson"]


def test_unknown_problem_and_param():
    with pytest.raises(ProblemError):
        builtin_problem("heat")
    with pytest.raises(ProblemError):
        builtin_problem("poisson", {"source": "1"})
    with pytest.raises(ProblemError):
        builtin_problem("poisson", {"g": "x1+"})


def test_non_all_sides_needs_rank_2():
    with pytest.raises(ProblemError):
        builtin_problem("dirichlet", n=3, boundary_mode="three_sides_2d")


def test_dirichlet_zero_state():
    g = build_grid(BoxDomain.unit(2), [8, 8])
    p = builtin_problem("dirichlet")
    assert evaluate_functional(p, GridFunction.zeros(g, Placement.CELLS)) == 0.0
    assert p.exact_solution is not None
    assert p.exact_solution[0](0.3, 0.4) == 0.0


def test_constant_lagrangian_gives_volume():
    g = build_grid(BoxDomain.unit(2), [8, 8])
    val = evaluate_functional(constant_lagrangian(), GridFunction.zeros(g, Placement.CELLS))
    assert val == pytest.approx(1.0, abs=1e-15)


def test_poisson_energy_at_exact_solution():
    g = build_grid(BoxDomain.unit(2), [64, 64])
    p = builtin_problem("poisson")
    v = mixed_derivative(sample_expression(p.exact_solution[0], g, Placement.NODES))
    assert evaluate_functional(p, v) == pytest.approx(POISSON_EXACT_ENERGY, abs=1e-3)


def test_poisson_default_source_is_minus_laplacian():
    p = builtin_problem("poisson")
    s = p.exact_solution[0]
    lap = s.diff(0).diff(0)(0.3, 0.6) + s.diff(1).diff(1)(0.3, 0.6)
    g = parse_expression("2*pi^2*sin(pi*x1)*sin(pi*x2)", n=2)
    assert -lap == pytest.approx(g(0.3, 0.6), rel=1e-14)


def test_nonlinear_manufactured_source():
    p = builtin_problem("nonlinear_poisson")
    g = p.data["g"]
    x = (0.21, 0.83)
    s = np.sin(np.pi * x[0]) * np.sin(np.pi * x[1])
    assert g(*x) == pytest.approx(2 * np.pi**2 * s + s**3, rel=1e-14)


def test_custom_source_drops_exact_solution():
    p = builtin_problem("poisson", {"g": "1"})
    assert p.exact_solution is None


@pytest.mark.parametrize("name", ["dirichlet", "poisson", "nonlinear_poisson", "coupled_vector"])
def test_lagrangian_derivatives_match_fd(name, rng):
    p = builtin_problem(name)
    lag, d, n = p.lagrangian, p.d, p.n
    x = rng.uniform(0, 1, (n, 20))
    u = rng.standard_normal((d, 20))
    z = rng.standard_normal((d, n, 20))
    step = 1e-5
    du, dz = lag.du(x, u, z), lag.dz(x, u, z)
    for j in range(d):
        e = np.zeros_like(u)
        e[j] = step
        fd = (lag.value(x, u + e, z) - lag.value(x, u - e, z)) / (2 * step)
        np.testing.assert_allclose(du[j], fd, rtol=1e-6, atol=1e-8)
        for i in range(n):
            e = np.zeros_like(z)
            e[j, i] = step
            fd = (lag.value(x, u, z + e) - lag.value(x, u, z - e)) / (2 * step)
            np.testing.assert_allclose(dz[j, i], fd, rtol=1e-6, atol=1e-8)


def test_functional_symmetric_under_axis_swap(rng):
    g = build_grid(BoxDomain.unit(2), [12, 12])
    p = builtin_problem("poisson")
    v = random_cells(g, rng)
    swapped = v.with_values(np.swapaxes(v.values, 1, 2))
    assert evaluate_functional(p, swapped) == pytest.approx(evaluate_functional(p, v), rel=1e-12)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_lagrangian_reports_cell():
    g = build_grid(BoxDomain.unit(2), [4, 4])
    p = custom_problem(
        2,
        value=lambda x, u, z: 1.0 / (x[0] - x[0][1, 2]),
        du=lambda x, u, z: np.zeros_like(u),
        dz=lambda x, u, z: np.zeros_like(z),
    )
    with pytest.raises(EvaluationError) as info:
        evaluate_functional(p, GridFunction.zeros(g, Placement.CELLS))
    assert "cell" in str(info.value)


def test_lift_enters_reconstruction():
    g = build_grid(BoxDomain.unit(2), [4, 4])
    p = builtin_problem("dirichlet", {"lift": "x1 + 2*x2"})
    u = reconstruct_u(p, GridFunction.zeros(g, Placement.CELLS))
    np.testing.assert_allclose(u.values, sample_expression("x1 + 2*x2", g, Placement.NODES).values)
    # linear lift is harmonic: zero gradient and constant energy 1/2 * |(1, 2)|^2
    assert evaluate_functional(p, GridFunction.zeros(g, Placement.CELLS)) == pytest.approx(2.5)


def test_problem_mode_switch():
    p = builtin_problem("dirichlet")
    q = p.with_mode(BoundaryMode.THREE_SIDES_2D)
    assert q.boundary_mode is BoundaryMode.THREE_SIDES_2D
    assert p.boundary_mode is BoundaryMode.ALL_SIDES

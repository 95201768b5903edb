import numpy as np
import pytest

from varidescent import (
    BoxDomain,
    EvaluationError,
    GridFunction,
    IsoperimetricConstraint,
    OptimizerConfig,
    Placement,
    Termination,
    armijo_search,
    backtracking_line_search,
    build_grid,
    builtin_problem,
    certify_L0,
    compute_G,
    custom_problem,
    evaluate_constraint,
    inner_product_l2,
    minimize,
    norm_l2,
    project_L0,
    reconstruct_u,
    sample_expression,
)
from varidescent.optimizer import LineSearchFailure
from varidescent.problems import _half_sq

from .conftest import random_cells


def _quadratic_setup(norm, rng):
    # in one dimension the Dirichlet energy of T v is 1/2 ||v||^2
    g = build_grid(BoxDomain.unit(1), [20])
    v = project_L0(random_cells(g, rng))
    v = v * (norm / norm_l2(v))
    p = builtin_problem("dirichlet", n=1)
    return p, v, compute_G(p, v)


def test_armijo_quadratic_accepts_full_step(rng):
    cfg = OptimizerConfig()
    # accepted iff 1 <= ||v|| (2 - 2 c1)
    p, v, b = _quadratic_setup(0.6, rng)
    assert armijo_search(p, v, b, cfg) == 1.0
    p, v, b = _quadratic_setup(0.4, rng)
    assert armijo_search(p, v, b, cfg) == 0.5


def test_armijo_orthogonal_direction_rejected(rng):
    p, v, b = _quadratic_setup(1.0, rng)
    # pairwise rotation: products cancel exactly, so <G, h> == 0.0
    G = b.G.values[0]
    h = np.empty_like(G)
    h[0::2], h[1::2] = G[1::2], -G[0::2]
    ortho = b.G.with_values(h[np.newaxis])
    assert inner_product_l2(b.G, ortho) == 0.0
    with pytest.raises(ValueError):
        armijo_search(p, v, b, OptimizerConfig(), direction=ortho)


def test_armijo_needs_nonzero_gradient(unit2):
    p = builtin_problem("dirichlet")
    v = GridFunction.zeros(unit2, Placement.CELLS)
    with pytest.raises(ValueError):
        armijo_search(p, v, compute_G(p, v), OptimizerConfig())


def test_backtracking_satisfies_sufficient_decrease():
    cfg = OptimizerConfig(step0=4.0)
    f = lambda a: (a - 0.3) ** 2
    alpha, fa = backtracking_line_search(f, f(0.0), -0.6, cfg)
    assert fa <= f(0.0) + cfg.armijo_c1 * alpha * -0.6
    assert alpha == 0.5


def test_backtracking_failure():
    with pytest.raises(LineSearchFailure):
        backtracking_line_search(lambda a: 1.0 + a, 1.0, -1.0, OptimizerConfig())


@pytest.mark.parametrize(
    "kwargs",
    [
        {"max_iters": -1},
        {"max_iters": 2.5},
        {"armijo_c1": 0.0},
        {"armijo_c1": 1.0},
        {"shrink": 1.0},
        {"step0": 0.0},
        {"min_step": -1.0},
        {"tol_grad": -1e-3},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        OptimizerConfig(**kwargs)


def test_dirichlet_zero_is_critical(unit2):
    r = minimize(builtin_problem("dirichlet"), unit2)
    assert r.termination is Termination.CRITICAL_POINT
    assert len(r.iterations) == 1
    assert r.iterations[0].step == 0.0


def test_max_iters_zero_returns_initial_state(unit2):
    p = builtin_problem("poisson")
    r = minimize(p, unit2, OptimizerConfig(max_iters=0))
    assert r.termination is Termination.MAX_ITERATIONS
    assert len(r.iterations) == 1
    assert np.all(r.final_v.values == 0.0)


def test_poisson_solve_64():
    g = build_grid(BoxDomain.unit(2), [64, 64])
    p = builtin_problem("poisson")
    r = minimize(p, g)
    assert r.termination is Termination.GRADIENT_TOLERANCE
    assert r.iterations[-1].grad_norm <= 1e-6
    exact = sample_expression(p.exact_solution[0], g, Placement.NODES)
    assert np.max(np.abs(r.final_u.values - exact.values)) <= 5e-3
    np.testing.assert_array_equal(r.final_u.values, reconstruct_u(p, r.final_v).values)


def test_monotone_and_feasible_iterates(rng):
    g = build_grid(BoxDomain([0, 0], [2, 1]), [16, 12])
    p = builtin_problem("nonlinear_poisson", {"g": "10*x1*x2", "lift": "x1 + x2^2", "lift_grad": [["1", "2*x2"]]})
    seen = []
    r = minimize(p, g, OptimizerConfig(max_iters=60), callback=lambda k, v, b: seen.append(v))
    F = [rec.F for rec in r.iterations]
    assert all(b <= a for a, b in zip(F, F[1:]))
    first = reconstruct_u(p, seen[0]).values[:, g.boundary_mask()]
    for v in seen:
        assert certify_L0(v, 1e-10)
        drift = reconstruct_u(p, v).values[:, g.boundary_mask()] - first
        assert np.max(np.abs(drift)) <= 1e-10


def test_initial_guess_projected(unit2, rng):
    p = builtin_problem("poisson")
    r = minimize(p, unit2, OptimizerConfig(max_iters=0), v0=random_cells(unit2, rng))
    assert certify_L0(r.final_v, 1e-12)


def test_deterministic_reports(unit2):
    p = builtin_problem("nonlinear_poisson")
    a = minimize(p, unit2, OptimizerConfig(max_iters=20))
    b = minimize(p, unit2, OptimizerConfig(max_iters=20))
    assert a.iterations == b.iterations
    np.testing.assert_array_equal(a.final_v.values, b.final_v.values)


def test_wrong_gradient_ends_in_line_search_failure(unit2):
    p = custom_problem(
        2,
        value=lambda x, u, z: _half_sq(z) - u[0],
        du=lambda x, u, z: np.ones_like(u),
        dz=lambda x, u, z: -z,
    )
    r = minimize(p, unit2)
    assert r.termination is Termination.LINE_SEARCH_FAILURE


def test_evaluation_error_carries_partial_report(unit2):
    def value(x, u, z):
        with np.errstate(invalid="ignore"):
            return _half_sq(z) - 20.0 * u[0] + 0.0 * np.sqrt(0.2 - u[0])

    p = custom_problem(
        2,
        value=value,
        du=lambda x, u, z: np.full_like(u, -20.0),
        dz=lambda x, u, z: z,
    )
    with pytest.raises(EvaluationError) as info:
        minimize(p, unit2)
    report = info.value.report
    assert report is not None
    assert report.termination is None
    assert len(report.iterations) >= 1


def test_isoperimetric_run_keeps_constraint(unit2):
    p = builtin_problem("poisson")
    con = IsoperimetricConstraint(g0="1", c=0.1)
    r = minimize(p, unit2, OptimizerConfig(max_iters=40), constraint=con)
    assert evaluate_constraint(p, con, r.final_v) == pytest.approx(0.1, abs=1e-10)
    assert len(r.multipliers) == len(r.iterations)
    F = [rec.F for rec in r.iterations]
    assert all(b <= a for a, b in zip(F, F[1:]))

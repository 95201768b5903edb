"""Steepest descent for variational problems on boxes.

The unknown is written ``u = ubar + T v`` where ``ubar`` carries the
boundary data and ``T`` integrates a cell field ``v`` along every axis.
Fields ``v`` whose slab integrals vanish give ``T v = 0`` on the boundary,
so descent on ``v`` never disturbs the boundary values.
"""

from .descent import (
    CriticalPointError,
    DegenerateConstraintError,
    GradientBundle,
    IsoperimetricConstraint,
    boundary_mode_gradient,
    closed_form_direction_2d,
    compute_G,
    compute_Q,
    constraint_gradient,
    directional_derivative,
    euler_lagrange_residual,
    evaluate_constraint,
    higher_order_face_residuals,
    higher_order_lift,
    higher_order_normal_derivative,
    isoperimetric_direction,
    mode_projection,
    steepest_direction,
)
from .expressions import Expr, ExpressionError, ExpressionSyntaxError, parse_expression
from .grid import (
    BoxDomain,
    GridError,
    GridFunction,
    MultiIndex,
    Placement,
    UniformGrid,
    build_grid,
    inner_product_l2,
    multi_indices,
    norm_l2,
    sample_expression,
)
from .operators import (
    L0Certificate,
    center_average,
    certify_L0,
    cumulative_integral_axis,
    full_lift_T,
    lifted_gradient,
    m0_norm,
    mixed_derivative,
    project_kernel,
    project_L0,
    reversed_cumulative_axis,
    slab_integral,
)
from .optimizer import (
    DescentReport,
    IterationRecord,
    LineSearchFailure,
    OptimizerConfig,
    Termination,
    armijo_search,
    backtracking_line_search,
    minimize,
)
from .problems import (
    BoundaryMode,
    EvaluationError,
    Lagrangian,
    Problem,
    ProblemError,
    builtin_problem,
    custom_problem,
    evaluate_functional,
    list_problems,
    reconstruct_u,
    register_problem,
)

__version__ = "0.1.0"

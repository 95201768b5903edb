"""The lift T, its inverse, and the projector onto zero-slab fields.

A cell field v is integrated along every axis to give a node field T v.
Its mixed forward difference recovers v exactly, and when every line
integral of v vanishes, T v is zero on the whole boundary.
"""

import numpy as np

from varidescent import (
    BoxDomain,
    GridFunction,
    Placement,
    build_grid,
    certify_L0,
    full_lift_T,
    m0_norm,
    mixed_derivative,
    norm_l2,
    project_L0,
)

rng = np.random.default_rng(7)
grid = build_grid(BoxDomain([0.0, -1.0], [2.0, 1.0]), [24, 16])
v = GridFunction(grid, Placement.CELLS, rng.standard_normal((1, *grid.cell_shape)))

u = full_lift_T(v)
print("round trip error   ", np.max(np.abs(mixed_derivative(u).values - v.values)))
print("||T v||_M0 - ||v|| ", m0_norm(u) - norm_l2(v))

# a raw random field does not vanish on the upper faces
mask = grid.boundary_mask()
print("boundary max |T v| ", np.max(np.abs(u.values[:, mask])))

# after projection every slab integral is zero and so is the boundary trace
w = project_L0(v)
cert = certify_L0(w, 1e-12)
print("certificate        ", cert.max_slab_residual, "passed" if cert else "failed")
print("boundary max |T w| ", np.max(np.abs(full_lift_T(w).values[:, mask])))

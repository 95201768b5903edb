"""Twice-integrated lift for fourth-order problems.

Integrating twice along each axis gives a lift whose value and normal
derivative vanish on the lower faces.  On the upper faces the normal
derivative equals a slab integral of v, so it vanishes for zero-slab
fields.  The value there is a first moment of v, which the zero-slab
condition does not control.
"""

import numpy as np

from varidescent import (
    BoxDomain,
    Placement,
    build_grid,
    higher_order_face_residuals,
    higher_order_lift,
    sample_expression,
)

grid = build_grid(BoxDomain.unit(2), [64, 64])

v = sample_expression("sin(2*pi*x1)*sin(2*pi*x2)", grid, Placement.CELLS)
for (axis, side), (value, normal) in sorted(higher_order_face_residuals(v).items()):
    print(f"x{axis + 1} {side:5s} face: max|w|={value:.2e}  max|dw/dn|={normal:.2e}")

w = higher_order_lift(v).values[0]
print("w(1, 1) =", w[-1, -1], " first-moment prediction", 1 / (4 * np.pi**2))

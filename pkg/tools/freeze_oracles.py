"""Recompute the frozen reference values in tests/frozen_values.py.

Uses sympy and scipy quadrature only; nothing from varidescent is
imported, so the values are independent of the code under test.

    python3 tools/freeze_oracles.py > tests/frozen_values.py
"""

import numpy as np
import sympy as sp
from scipy import integrate

x1, x2, t = sp.symbols("x1 x2 t", real=True)
s = sp.sin(sp.pi * x1) * sp.sin(sp.pi * x2)


def lap(e):
    return sp.diff(e, x1, 2) + sp.diff(e, x2, 2)


# unit square integral of sin^2(pi x)
int_sin2 = sp.integrate(sp.sin(sp.pi * x1) ** 2, (x1, 0, 1))

# Poisson energy 1/2|grad s|^2 - g s with g = -lap(s)
g = sp.simplify(-lap(s))
energy = sp.integrate(
    sp.Rational(1, 2) * (sp.diff(s, x1) ** 2 + sp.diff(s, x2) ** 2) - g * s,
    (x1, 0, 1),
    (x2, 0, 1),
)

# manufactured source for 1/2|z|^2 + u^4/4 - g u
g_nl = sp.simplify(-lap(s) + s**3)
g_nl_claim = 2 * sp.pi**2 * s + s**3
assert sp.simplify(g_nl - g_nl_claim) == 0

# tail integral of -g at u = 0, checked against adaptive quadrature
tail = sp.integrate(sp.integrate(-g.subs({x1: t}), (t, x1, 1)).subs({x2: t}), (t, x2, 1))
tail = sp.simplify(tail)
g_num = sp.lambdify((x1, x2), g, "math")
# cell centres of the 64 x 64 grid
pts = [(6.5 / 64, 12.5 / 64), (32.5 / 64, 32.5 / 64), (57.5 / 64, 19.5 / 64), (15.5 / 64, 47.5 / 64)]
tail_vals = []
for a, b in pts:
    q, _ = integrate.dblquad(lambda y, x: -g_num(x, y), a, 1, b, 1, epsabs=1e-13, epsrel=1e-13)
    assert abs(q - float(tail.subs({x1: a, x2: b}))) < 1e-9
    tail_vals.append(q)

# first moment of sin(2 pi x) against (1 - t): value of the twice
# integrated field on the upper face for the 1-D factor
moment = sp.integrate((1 - t) * sp.sin(2 * sp.pi * t), (t, 0, 1))

print('"""Reference values produced by tools/freeze_oracles.py (sympy, scipy)."""')
print()
print(f"INT_SIN2_UNIT = {float(int_sin2)!r}")
print(f"POISSON_EXACT_ENERGY = {float(energy)!r}  # {energy}")
print(f"POISSON_TAIL_POINTS = {pts!r}")
print(f"POISSON_TAIL_AT_ZERO = {tail_vals!r}  # {tail}")
print(f"SIN2PI_UPPER_MOMENT = {float(moment)!r}  # {moment}")

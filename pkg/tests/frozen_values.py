"""Reference values produced by tools/freeze_oracles.py (sympy, scipy)."""

INT_SIN2_UNIT = 0.5
POISSON_EXACT_ENERGY = -2.4674011002723395  # -pi**2/4
POISSON_TAIL_POINTS = [(0.1015625, 0.1953125), (0.5078125, 0.5078125), (0.8984375, 0.3046875), (0.2421875, 0.7421875)]
POISSON_TAIL_AT_ZERO = [-7.086865627713882, -1.9030396297031789, -0.15906781291451008, -1.070617620223628]  # -2*cos(pi*x1)*cos(pi*x2) - 2*cos(pi*x1) - 2*cos(pi*x2) - 2
SIN2PI_UPPER_MOMENT = 0.15915494309189535  # 1/(2*pi)

"""Reference computations that do not go through the package kernels."""

import mpmath as mp
import numpy as np

from weibull_gof.estimators import profile_equation


def grid_bisection_root(x, lo=1e-3, hi=1e3):
    """Shape root of the profile equation: coarse grid for the sign change, then bisection."""
    grid = np.geomspace(lo, hi, 2001)
    vals = [profile_equation(x, k) for k in grid]
    i = next(j for j in range(len(grid) - 1) if vals[j] > 0 >= vals[j + 1])
    a, b = grid[i], grid[i + 1]
    for _ in range(200):
        m = 0.5 * (a + b)
        if profile_equation(x, m) > 0:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def gauss_n1():
    """Gaussian-weight statistic for the sample {1} at (1, 1), a = 1, to 30 digits."""
    with mp.workdps(30):
        f = lambda t: (1 - mp.e**-t - t * mp.e**-t) ** 2 * mp.e ** (-t * t)
        return float(mp.quad(f, [0, 1, 3, mp.inf]))

import math

import pytest
from scipy.optimize import brentq

from expoweb.growth import GrowthConstants, Parameter
from expoweb.orbits import find_cycle

PERIOD3 = complex(2.061, 1.569)


def bisect_root(g, lo, hi):
    """Plain bisection; the oracle for real fixed points."""
    glo = g(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


# attracting and repelling fixed points of e^x - 2
Q_ATTRACT = bisect_root(lambda x: math.exp(x) - 2.0 - x, -2.0, -1.0)
P_REPEL = bisect_root(lambda x: math.exp(x) - x - 2.0, 0.5, 2.0)


@pytest.fixture(scope="session")
def p2():
    return Parameter(-2.0)


@pytest.fixture(scope="session")
def cycle2(p2):
    return find_cycle(p2)


@pytest.fixture(scope="session")
def cfg2(p2):
    return GrowthConstants.make(p2, 3.0)


@pytest.fixture(scope="session")
def p3():
    return Parameter(PERIOD3)


@pytest.fixture(scope="session")
def cycle3(p3):
    return find_cycle(p3)


@pytest.fixture(scope="session")
def brentq_fixed_points():
    # second route for the same roots
    return (brentq(lambda x: math.exp(x) - 2.0 - x, -2.0, -1.0, xtol=1e-15, rtol=1e-15),
            brentq(lambda x: math.exp(x) - x - 2.0, 0.5, 2.0, xtol=1e-15, rtol=1e-15))

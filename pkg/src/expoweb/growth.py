"""Growth estimates for f_a(z) = e^z + a: maximum modulus, its iterates and
the bounds relating them to F(t) = e^t - 1."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .tower import LOG_MAX, TowerValue, as_tower, iterate_F, tower_add_small

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
THETA_GRID = 4096
MM_REL_TOL = 1e-10
# relative slack attached to every numerically maximized modulus
MM_SLACK = 1e-9
SANDWICH_REL_TOL = 1e-12


@dataclass(frozen=True)
class Parameter:
    a: complex
    abs_a: float = field(init=False)

    def __post_init__(self):
        a = complex(self.a)
        if not (math.isfinite(a.real) and math.isfinite(a.imag)):
            raise ValueError("parameter a must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "abs_a", abs(a))

    @property
    def is_real(self) -> bool:
        return self.a.imag == 0.0

    def f(self, z: complex) -> complex:
        return cmath.exp(z) + self.a

    def growth_threshold(self, K: float = 1.0) -> float:
        """Smallest real part for which the growth sandwich is guaranteed."""
        return math.log1p(2.0 * (self.abs_a + K))

    def radius_threshold(self, K: float = 1.0) -> float:
        return max(3.0, self.growth_threshold(K))


def continued_growth_K(mu: float, p: Parameter) -> float:
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    return max(2.0 + math.log(5.0 + p.abs_a), mu + 2.0)


@dataclass(frozen=True)
class GrowthConstants:
    K: float
    mu: float
    K_growth: float
    R: float
    half_plane_c: float

    @staticmethod
    def make(p: Parameter, R: float, K: float = 1.0, mu: float | None = None,
             c: float = 0.0) -> "GrowthConstants":
        if K < 1.0:
            raise ValueError(f"K must be >= 1 (got {K})")
        if R <= 0:
            raise ValueError("R must be positive")
        if mu is None:
            mu = R + 1.0
        return GrowthConstants(K=K, mu=mu, K_growth=continued_growth_K(mu, p),
                               R=R, half_plane_c=c)


# ---------------------------------------------------------------- max modulus

def _modulus_on_circle(r: float, a: complex, theta):
    return np.abs(np.exp(r * np.exp(1j * theta)) + a)


def _golden_max(g, lo: float, hi: float, tol: float = 1e-13):
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    g1, g2 = g(x1), g(x2)
    while hi - lo > tol:
        if g1 < g2:
            lo, x1, g1 = x1, x2, g2
            x2 = lo + GOLDEN * (hi - lo)
            g2 = g(x2)
        else:
            hi, x2, g2 = x2, x1, g1
            x1 = hi - GOLDEN * (hi - lo)
            g1 = g(x1)
    xm = 0.5 * (lo + hi)
    return max(g1, g2, g(xm))


def max_modulus(r: float, p: Parameter) -> float:
    """max over |z| = r of |e^z + a|, to about 1e-10 relative accuracy."""
    if not r > 0:
        raise ValueError("radius must be positive")
    if r > LOG_MAX:
        raise OverflowError(f"e^{r} is not representable")
    a = p.a
    if p.is_real:
        # |f(conj z)| = |f(z)|: half circle suffices
        theta = np.linspace(0.0, math.pi, THETA_GRID // 2 + 1)
    else:
        theta = np.linspace(-math.pi, math.pi, THETA_GRID, endpoint=False)
    vals = _modulus_on_circle(r, a, theta)
    h = theta[1] - theta[0]
    if p.is_real:
        left = np.concatenate(([-np.inf], vals[:-1]))
        right = np.concatenate((vals[1:], [-np.inf]))
    else:
        left = np.roll(vals, 1)
        right = np.roll(vals, -1)
    peaks = np.nonzero((vals >= left) & (vals >= right))[0]
    peaks = peaks[np.argsort(vals[peaks])[::-1][:6]]

    def g(t):
        return abs(cmath.exp(r * cmath.exp(1j * t)) + a)

    best = float(vals.max())
    for i in peaks:
        best = max(best, _golden_max(g, theta[i] - h, theta[i] + h))
    return best


@dataclass(frozen=True)
class MBracket:
    """Conservative enclosure of M^n(R, f_a)."""
    n: int
    lower: TowerValue
    upper: TowerValue
    direct_lower: TowerValue
    direct_upper: TowerValue
    sandwich_lower: TowerValue
    sandwich_upper: TowerValue
    estimate: float | None  # float value while directly computable

    def contains(self, v) -> bool:
        v = as_tower(v)
        return self.lower <= v <= self.upper


def sandwich_bracket(R: float, n: int, K: float = 1.0):
    """(F^n(R-1)+K, F^n(R+1)-K) as tower values, rounded outwards."""
    if n == 0:
        return as_tower(R), as_tower(R)
    lo = tower_add_small(iterate_F(R - 1.0, n), K, -1)
    hi = tower_add_small(iterate_F(R + 1.0, n), -K, +1)
    return lo, hi


def max_modulus_iter(R: float, p: Parameter, n: int, K: float = 1.0) -> MBracket:
    """Bracket for the n-th iterate of r -> M(r, f_a) starting at R."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if K < 1.0:
        raise ValueError("K must be >= 1")
    need = max(3.0, p.growth_threshold(K))
    if R < need:
        raise ValueError(f"R={R} below the growth threshold {need}")
    lo = hi = float(R)
    lo_t = hi_t = as_tower(R)
    est: float | None = float(R)
    for _ in range(n):
        if est is not None and hi <= LOG_MAX:
            lo = max_modulus(lo, p) * (1.0 - MM_SLACK)
            hi = max_modulus(hi, p) * (1.0 + MM_SLACK)
            est = max_modulus(est, p)
            lo_t, hi_t = as_tower(lo), as_tower(hi)
        else:
            est = None
            # e^r - |a| <= M(r) <= e^r + |a|
            if lo_t.level == 0 and lo_t.base <= LOG_MAX:
                lo_t = as_tower(max_modulus(lo_t.base, p) * (1.0 - MM_SLACK))
            else:
                lo_t = tower_add_small(lo_t.exp(), -p.abs_a, -1).nudged(-1)
            hi_t = tower_add_small(hi_t.exp(), p.abs_a, +1).nudged(+1)
    s_lo, s_hi = sandwich_bracket(R, n, K)
    lower = max(lo_t, s_lo)
    upper = min(hi_t, s_hi)
    return MBracket(n=n, lower=lower, upper=upper, direct_lower=lo_t,
                    direct_upper=hi_t, sandwich_lower=s_lo, sandwich_upper=s_hi,
                    estimate=est)


def threshold_table(R: float, p: Parameter, depth: int, K: float = 1.0) -> list[MBracket]:
    return [max_modulus_iter(R, p, k, K) for k in range(depth + 1)]


# -------------------------------------------------------------- R(f_a) = 0

def verify_R_zero(p: Parameter, R_samples) -> list[dict]:
    """Check M(R) > R for each sample, with the elementary two-case bound."""
    out = []
    for R in R_samples:
        R = float(R)
        if not R > 0:
            raise ValueError("radii must be positive")
        M = max_modulus(R, p)
        if R + math.exp(-R) < -p.a.real:
            case = "left"
            bound = -p.a.real - math.exp(-R)
        else:
            case = "right"
            bound = math.exp(R) + p.a.real
        out.append({
            "R": R,
            "M": M,
            "margin": M - R,
            "case": case,
            "case_bound": bound,
            "case_margin": bound - R,
            "consistent": M >= bound * (1.0 - 1e-12) - 1e-300,
            "holds": M > R and bound > R,
        })
    return out


# ---------------------------------------------------------- growth sandwich

def growth_sandwich_holds(z: complex, K: float, p: Parameter) -> bool:
    """F(Re z - 1) + K <= |f_a(z)| <= F(Re z + 1) - K, within 1e-12 relative."""
    if K < 1.0:
        raise ValueError("K must be >= 1")
    x = z.real
    if x < p.growth_threshold(K):
        raise ValueError("Re z below the growth threshold")
    tol = SANDWICH_REL_TOL
    if x + 1.0 <= 700.0:
        mid = abs(cmath.exp(z) + p.a)
        lo = math.expm1(x - 1.0) + K
        hi = math.expm1(x + 1.0) - K
        return lo <= mid * (1.0 + tol) and mid <= hi * (1.0 + tol)
    # log domain: ln|e^z + a| = x + ln|1 + a e^{-z}|
    log_mid = x + math.log(abs(1.0 + p.a * cmath.exp(-z)))
    log_lo = (x - 1.0) + math.log1p((K - 1.0) * math.exp(-(x - 1.0)))
    log_hi = (x + 1.0) + math.log1p(-(K + 1.0) * math.exp(-(x + 1.0)))
    return log_lo <= log_mid + tol and log_mid <= log_hi + tol


def sandwich_slack(z, K, a):
    """Vectorized log-domain slacks of the growth sandwich.

    Returns (low, high) with low = ln|f_a(z)| - ln(F(x-1)+K) and
    high = ln(F(x+1)-K) - ln|f_a(z)|; both are >= 0 where the sandwich holds."""
    z = np.asarray(z, dtype=np.complex128)
    K = np.asarray(K, dtype=float)
    a = np.asarray(a, dtype=np.complex128)
    x = z.real
    log_mid = x + np.log(np.abs(1.0 + a * np.exp(-z)))
    log_lo = (x - 1.0) + np.log1p((K - 1.0) * np.exp(-(x - 1.0)))
    log_hi = (x + 1.0) + np.log1p(-(K + 1.0) * np.exp(-(x + 1.0)))
    return log_mid - log_lo, log_hi - log_mid


# ---------------------------------------------------------- continued growth

@dataclass(frozen=True)
class GrowthBound:
    n: int
    bound: TowerValue | None
    violation_index: int | None

    @property
    def ok(self) -> bool:
        return self.bound is not None


def continued_growth_bound(z: complex, mu: float, p: Parameter, orbit_prefix) -> GrowthBound:
    """Lower bound F^n(Re z - 2) for |f^n(z)|, n = len(orbit_prefix), provided
    max(-Re f^k(z), |Im f^k(z)|) <= F^k(mu) for every k < n."""
    Kc = continued_growth_K(mu, p)
    if z.real < Kc:
        raise ValueError(f"Re z = {z.real} below {Kc}")
    prefix = [complex(w) for w in orbit_prefix]
    n = len(prefix)
    if n and abs(prefix[0] - z) > 1e-12 * max(1.0, abs(z)):
        raise ValueError("orbit prefix does not start at z")
    for k in range(n - 1):
        w = prefix[k]
        if w.real > LOG_MAX:
            raise ValueError(f"orbit prefix entry {k + 1} is not computable")
        nxt = p.f(w)
        if abs(nxt - prefix[k + 1]) > 1e-9 * max(1.0, abs(nxt)):
            raise ValueError(f"orbit prefix mismatch at index {k + 1}")
    for k, w in enumerate(prefix):
        if as_tower(max(-w.real, abs(w.imag))) > iterate_F(mu, k):
            return GrowthBound(n=n, bound=None, violation_index=k)
    return GrowthBound(n=n, bound=iterate_F(z.real - 2.0, n), violation_index=None)

"""Fatou's function f(z) = z + 1 + e^{-z}, its semiconjugate h(zeta) = e^{-1} zeta e^{-zeta}
via zeta = e^{-z}, and the conjugate h~(w) = (w + 1) e^w - 1 via w = -zeta - 1."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .tower import LOG_MAX, TowerValue, as_tower, iterate_F

EPS = np.finfo(float).eps


def eval_fatou(z):
    z = np.asarray(z, dtype=np.complex128) if np.ndim(z) else complex(z)
    return z + 1.0 + np.exp(-z)


def eval_h(zeta):
    return math.exp(-1.0) * zeta * np.exp(-zeta)


def eval_h_tilde(w):
    return (w + 1.0) * np.exp(w) - 1.0


# ------------------------------------------------------------- identities

def _mp_residuals(z: complex, dps: int):
    import mpmath
    with mpmath.workdps(dps):
        zz = mpmath.mpc(z)
        lhs = mpmath.exp(-(zz + 1 + mpmath.exp(-zz)))
        g = mpmath.exp(-zz)
        rhs = mpmath.exp(-1) * g * mpmath.exp(-g)
        return float(abs(lhs - rhs) / abs(lhs))


def semiconjugacy_residual(z, dps: int | None = None):
    """|g(f(z)) - h(g(z))| / |g(f(z))| with g(z) = e^{-z}.

    Float path: both sides are compared through their logarithms, -f(z)
    against -1 + Log(zeta) - zeta with zeta evaluated first, which avoids
    overflow of e^{-e^{-z}}; the difference is taken modulo 2*pi*i.  The error
    grows like eps (|z| + |e^{-z}|), so beyond Re z < -10 or so pass ``dps``
    to evaluate both sides with mpmath."""
    if dps is not None:
        if np.ndim(z):
            return np.array([_mp_residuals(complex(v), dps) for v in np.ravel(z)]).reshape(np.shape(z))
        return _mp_residuals(complex(z), dps)
    z = np.asarray(z, dtype=np.complex128)
    log_lhs = -eval_fatou(z)
    zeta = np.exp(-z)
    log_rhs = -1.0 + np.log(zeta) - zeta
    diff = log_rhs - log_lhs
    diff = diff.real + 1j * (np.remainder(diff.imag + np.pi, 2.0 * np.pi) - np.pi)
    out = np.abs(np.expm1(diff))
    return float(out) if out.ndim == 0 else out


def conjugacy_residual(zeta, relative: bool = True):
    """|h~(-zeta - 1) - (-h(zeta) - 1)|, divided by max(1, |h~(-zeta-1)|) when relative."""
    zeta = np.asarray(zeta, dtype=np.complex128)
    lhs = eval_h_tilde(-zeta - 1.0)
    rhs = -eval_h(zeta) - 1.0
    out = np.abs(lhs - rhs)
    if relative:
        out = out / np.maximum(1.0, np.abs(lhs))
    return float(out) if out.ndim == 0 else out


# ------------------------------------------------------------- orbits

def orbit_modulus_bounds(z: complex, n: int) -> list:
    """Lower bounds for |f^k(z)|, k = 0..n, as TowerValues.

    Entries become None once a bound is no longer available: when e^{-w}
    overflows only |f(w)| and arg f(w) are known, which settles one more step
    if Re f(w) is certainly very negative and all later steps if it is
    certainly very positive (then f acts as w -> w + 1 up to e^{-Re w})."""
    out: list = []
    w = complex(z)
    mode = "float"
    bound: TowerValue | None = None
    for k in range(n + 1):
        if mode == "float":
            out.append(as_tower(abs(w) * (1.0 - 4.0 * EPS)))
            if k == n:
                break
            if -w.real <= LOG_MAX:
                w = w + 1.0 + cmath.exp(-w)
                if not (math.isfinite(w.real) and math.isfinite(w.imag)):
                    mode = "lost"
                continue
            # e^{-w} is out of range: |e^{-w}| = e^{-Re w}, arg = -Im w
            big = -w.real
            cs = math.cos(w.imag)
            slack = 8.0 * EPS * max(1.0, abs(w.imag))
            if cs > slack:
                L = big + math.log(cs - slack)  # Re f(w) >= e^L - |w| - 1
                bound = TowerValue.make(1, L).nudged(-1)
                mode = "right"
            elif cs < -slack:
                L = big + math.log(-cs - slack)  # Re f(w) <= -(e^L - |w| - 1)
                bound = TowerValue.make(1, L).nudged(-1)
                mode = "left"
            else:
                bound = TowerValue.make(1, big).nudged(-1)
                mode = "once"
        elif mode == "right":
            # |f(w)| >= |w| - 2 once Re w is huge; invisible at tower level >= 1
            out.append(bound)
        elif mode in ("left", "once"):
            out.append(bound)
            if mode == "left":
                # |f^2| >= e^{|Re f(w)|} - |f(w)| - 1
                bound = bound.exp().nudged(-1)
                mode = "once"
            else:
                mode = "lost"
        else:
            out.append(None)
    return out


@dataclass(frozen=True)
class FatouOrbitConfig:
    T: float = 1.0
    n0_max: int = 8
    depth: int = 4

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.n0_max < 0:
            raise ValueError("n0_max must be nonnegative")


@dataclass(frozen=True)
class FatouVerdict:
    verified: bool
    n0: int | None
    depth: int
    first_failure: tuple | None  # (n0, k) of the last shift tried

    def __str__(self):
        return f"verified(n0={self.n0}, depth={self.depth})" if self.verified else "not-verified"


def shift_holds(bounds: list, n0: int, cfg: FatouOrbitConfig):
    """First k <= depth with |f^{n0+k}(z)| >= F^k(T) unproven, or None."""
    for k in range(cfg.depth + 1):
        b = bounds[n0 + k]
        if b is None or b < iterate_F(cfg.T, k):
            return k
    return None


def fatou_A_membership(z: complex, cfg: FatouOrbitConfig = FatouOrbitConfig()) -> FatouVerdict:
    """Smallest n0 <= n0_max with |f^{n0+k}(z)| >= F^k(T) for all k <= depth."""
    bounds = orbit_modulus_bounds(z, cfg.n0_max + cfg.depth)
    fail = None
    for n0 in range(cfg.n0_max + 1):
        k = shift_holds(bounds, n0, cfg)
        if k is None:
            return FatouVerdict(True, n0, cfg.depth, None)
        fail = (n0, k)
    return FatouVerdict(False, None, cfg.depth, fail)


# ------------------------------------------------------------- h and h~ orbits

def _orbit_label(w0, step, target, n, tol, escape):
    w = w0
    for _ in range(n):
        if abs(w - target) < tol:
            return "attracted"
        if not (abs(w) < escape):
            return "escaping"
        w = step(w)
    if abs(w - target) < tol:
        return "attracted"
    return "escaping" if not (abs(w) < escape) else "undecided"


def classify_h_orbit(zeta: complex, n: int = 200, tol: float = 1e-6, escape: float = 1e6) -> str:
    """attracted (to the fixed point 0) / escaping / undecided."""
    with np.errstate(over="ignore", invalid="ignore"):
        return _orbit_label(complex(zeta), lambda v: complex(eval_h(v)), 0.0, n, tol, escape)


def classify_h_tilde_orbit(w: complex, n: int = 200, tol: float = 1e-6, escape: float = 1e6) -> str:
    """attracted (to the fixed point -1) / escaping / undecided."""
    with np.errstate(over="ignore", invalid="ignore"):
        return _orbit_label(complex(w), lambda v: complex(eval_h_tilde(v)), -1.0, n, tol,
                            escape)

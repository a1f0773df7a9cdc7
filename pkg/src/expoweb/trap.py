"""Trap sets and separation certificates.

Pipeline: an access arc sigma joining the disc D(a, eps) to infinity inside the
Fatou set, the trap M = f^{-1}(D u sigma) (a left half-plane plus the
2*pi*i-translates of one preimage arc), the strip spread delta, the radius R,
the truncated set X_depth, and finally a closed curve of X_depth samples
winding around z0.
"""
from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .growth import Parameter, continued_growth_K
from .orbits import (EPS, RELIABILITY, Cycle, Thresholds, basin_test, find_cycle,
                     overflow_step, thread_count)
from .tower import LOG_MAX

TWO_PI = 2.0 * math.pi
FAR = 1e300
# relative thickness granted to the trap arcs in membership tests
TRAP_TOL = 1e-10
MAX_JUMP = math.pi / 2


class PullbackError(RuntimeError):
    pass


class CertificateError(RuntimeError):
    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = violations or []


class SearchExhausted(RuntimeError):
    pass


# ------------------------------------------------------------- polylines

def _branch_log(w: complex, a: complex, near_im: float) -> complex:
    z = cmath.log(w - a)
    m = round((near_im - z.imag) / TWO_PI)
    return complex(z.real, z.imag + TWO_PI * m)


def pull_back(poly: np.ndarray, a: complex, first_target: complex | None = None,
              max_refine: int = 60) -> np.ndarray:
    """Image of a polyline under the branch of log(w - a) that is continuous
    along it; the branch is fixed at the first vertex (nearest to
    ``first_target`` when given, principal otherwise).  Segments whose images
    jump by more than pi/2 are bisected."""
    poly = np.asarray(poly, dtype=np.complex128)
    if np.any(poly == a):
        raise PullbackError("polyline passes through the singular value")
    w0 = complex(poly[0])
    if first_target is None:
        z_prev = cmath.log(w0 - a)
    else:
        z_prev = _branch_log(w0, a, first_target.imag)
    out = [z_prev]
    for i in range(1, len(poly)):
        stack = [complex(poly[i])]
        w_prev = complex(poly[i - 1])
        depth = 0
        while stack:
            w = stack[-1]
            z = _branch_log(w, a, z_prev.imag)
            if abs(z - z_prev) > MAX_JUMP:
                depth += 1
                if depth > max_refine or abs(w - w_prev) < 1e-14 * max(1.0, abs(w)):
                    raise PullbackError(f"branch ambiguity near vertex {i}: {w}")
                stack.append(0.5 * (w_prev + w))
                continue
            stack.pop()
            out.append(z)
            z_prev, w_prev = z, w
    return np.array(out)


def extend_tail(poly: np.ndarray, count: int = 600) -> np.ndarray:
    """Append a horizontal run from the last vertex out to |Re| = 1e300, in the
    direction the polyline is heading."""
    last = poly[-1]
    x = last.real
    sign = 1.0 if x > 0 else -1.0
    start = max(abs(x), 1.0)
    if start >= FAR:
        return poly
    xs = sign * np.geomspace(start * 1.5, FAR, count)
    tail = xs + 1j * last.imag
    return np.concatenate((poly, tail))


def resample(path: np.ndarray, n: int) -> np.ndarray:
    """n points equally spaced in arclength along a polyline (ends included)."""
    path = np.asarray(path, dtype=np.complex128)
    if n < 2 or len(path) < 2:
        return path[:max(n, 1)].copy()
    seg = np.abs(np.diff(path))
    s = np.concatenate(([0.0], np.cumsum(seg)))
    t = np.linspace(0.0, s[-1], n)
    idx = np.clip(np.searchsorted(s, t, side="right") - 1, 0, len(seg) - 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(seg[idx] > 0, (t - s[idx]) / seg[idx], 0.0)
    out = path[idx] + frac * (path[idx + 1] - path[idx])
    out[0], out[-1] = path[0], path[-1]
    return out


def _segment_distance(z: complex, p0: np.ndarray, p1: np.ndarray) -> float:
    d = p1 - p0
    L2 = (d.real * d.real + d.imag * d.imag)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(L2 > 0, ((z - p0) * np.conj(d)).real / L2, 0.0)
    t = np.clip(t, 0.0, 1.0)
    return float(np.min(np.abs(z - (p0 + t * d))))


def winding_number(curve: np.ndarray, z0: complex) -> int:
    v = np.asarray(curve) - z0
    ang = np.angle(np.concatenate((v[1:], v[:1])) / v)
    return int(round(ang.sum() / TWO_PI))


# ------------------------------------------------------------ access arc

@dataclass(frozen=True)
class AccessArc:
    vertices: np.ndarray
    realpart_monotone_from: int
    eps: float
    source: dict = field(default_factory=dict, compare=False)


def _last_exit(path: np.ndarray, center: complex, radius: float):
    inside = np.abs(path - center) <= radius
    if not inside[0]:
        raise PullbackError("curve does not start inside the disc")
    i = int(np.nonzero(inside)[0].max())
    if i == len(path) - 1:
        raise PullbackError("curve never leaves the disc")
    lo, hi = complex(path[i]), complex(path[i + 1])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if abs(mid - center) <= radius:
            lo = mid
        else:
            hi = mid
    # place the start exactly on the circle along the final direction
    start = center + radius * (hi - center) / abs(hi - center)
    return np.concatenate(([start], path[i + 1:]))


def _monotone_from(v: np.ndarray) -> int:
    dx = np.diff(v.real)
    bad = np.nonzero(dx < 0)[0]
    return int(bad.max() + 1) if bad.size else 0


def _base_curve(start: complex, height: float, n_vert: int = 48) -> np.ndarray:
    """Vertical run of the given height from ``start``, then a horizontal run
    to Re = -1e300."""
    up = start + 1j * height * np.linspace(0.0, 1.0, n_vert)
    top = up[-1]
    d = np.concatenate((np.linspace(0.0, 1.0, 24)[1:], np.geomspace(1.0, FAR, 700)[1:]))
    left = top.real - d + 1j * top.imag
    return np.concatenate((up, left))


def build_access_arc(p: Parameter, cycle: Cycle, eps: float, height: float | None = None,
                     check_basin: bool = True) -> AccessArc:
    """Arc from the circle |z - a| = eps to Re = +inf inside the basin, obtained
    by pulling back a curve Gamma0 that joins f^n(a) to the far left."""
    if cycle.kind != "attracting":
        raise ValueError("an attracting cycle is required")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    a = p.a
    if check_basin:
        ring = a + eps * np.exp(1j * np.linspace(0, TWO_PI, 64, endpoint=False))
        ok = basin_test(ring, p, cycle)
        if not ok.all():
            raise ValueError("closed disc D(a, eps) not verified inside the basin")
    n = max(1, cycle.period - 1)
    orbit = [a]
    for _ in range(n):
        orbit.append(cmath.exp(orbit[-1]) + a)
    heights = [height] if height is not None else [1.0, -1.0, 0.5, -0.5, 2.0, -2.0]
    last_err = None
    for h in heights:
        g0 = _base_curve(orbit[n], h)
        near = min(float(np.min(np.abs(g0 - o))) for o in orbit[:n])
        if near < 1e-3:
            last_err = f"height {h}: Gamma0 passes within {near:.2e} of the singular orbit"
            continue
        if check_basin:
            mod = g0[np.abs(g0) < 1e6]
            if not basin_test(mod, p, cycle).all():
                last_err = f"height {h}: Gamma0 leaves the basin"
                continue
        curve = g0
        try:
            for j in range(n, 0, -1):
                curve = pull_back(extend_tail(curve) if j < n else curve, a, orbit[j - 1])
        except PullbackError as exc:
            last_err = str(exc)
            continue
        curve = extend_tail(curve)
        sigma = _last_exit(curve, a, eps)
        if check_basin:
            mod = sigma[sigma.real < 60.0]
            bad = ~basin_test(mod, p, cycle)
            if bad.any():
                last_err = f"height {h}: {int(bad.sum())} arc vertices not in the basin"
                continue
        info = {"pullbacks": n, "height": h, "gamma0_start": orbit[n]}
        return AccessArc(sigma, _monotone_from(sigma), eps, info)
    raise PullbackError(f"no admissible access arc: {last_err}")


# -------------------------------------------------------------- trap set

@dataclass(frozen=True)
class TrapSet:
    a: complex
    c: float
    base_arc: np.ndarray
    tail_im: float
    inf_im: float
    sup_im: float
    delta: float

    def in_half_plane(self, w: complex, err: float = 0.0) -> bool:
        return w.real + err <= -self.c

    def arc_distance(self, w: complex) -> float:
        """Distance from w to the union of the translated base arcs."""
        lo = math.floor((w.imag - self.sup_im) / TWO_PI) - 1
        hi = math.ceil((w.imag - self.inf_im) / TWO_PI) + 1
        best = math.inf
        b = self.base_arc
        for k in range(lo, hi + 1):
            v = w - 1j * TWO_PI * k
            if v.real < -self.c - 1.0 or v.imag < self.inf_im - 1.0 or v.imag > self.sup_im + 1.0:
                continue
            if v.real >= b[-1].real:
                d = math.hypot(0.0, v.imag - self.tail_im)
            else:
                d = _segment_distance(v, b[:-1], b[1:])
            best = min(best, d)
        return best

    def contains(self, w: complex, err: float = 0.0) -> bool:
        if not (math.isfinite(w.real) and math.isfinite(w.imag)):
            return False
        if self.in_half_plane(w, err):
            return True
        if w.real < -self.c - 1.0:
            return False
        return self.arc_distance(w) + err <= TRAP_TOL * max(1.0, abs(w))


def _compress_tail(v: np.ndarray) -> np.ndarray:
    """Drop trailing vertices that no longer change the imaginary part."""
    last = v[-1].imag
    i = len(v) - 1
    while i > 1 and v[i - 1].imag == last and v[i - 1].real > 0:
        i -= 1
    return v[:i + 1]


def build_trap(p: Parameter, eps: float, sigma: AccessArc) -> TrapSet:
    c = -math.log(eps)
    base = pull_back(sigma.vertices, p.a)
    if not np.all(np.diff(base.real[-5:]) > 0):
        raise PullbackError("preimage arc does not run off to the right")
    base = _compress_tail(base)
    inf_im = float(base.imag.min())
    sup_im = float(base.imag.max())
    delta = TWO_PI + (sup_im - inf_im)
    return TrapSet(a=p.a, c=c, base_arc=base, tail_im=float(base[-1].imag),
                   inf_im=inf_im, sup_im=sup_im, delta=delta)


def strip_delta(trap: TrapSet) -> float:
    return TWO_PI + (trap.sup_im - trap.inf_im)


def choose_R(z0: complex, trap: TrapSet, p: Parameter) -> float:
    return max(abs(z0), trap.c, 3.0, math.log1p(2.0 * (p.abs_a + strip_delta(trap)))) + 1.0


@dataclass(frozen=True)
class Rectangle:
    re_min: float
    re_max: float
    im_abs_max: float

    def contains(self, z: complex, strict: bool = True) -> bool:
        if strict:
            return self.re_min < z.real < self.re_max and abs(z.imag) < self.im_abs_max
        return self.re_min <= z.real <= self.re_max and abs(z.imag) <= self.im_abs_max

    def as_dict(self) -> dict:
        return {"re_min": self.re_min, "re_max": self.re_max, "im_abs_max": self.im_abs_max}


def right_bound(R: float, p: Parameter) -> float:
    return max(R + 3.0, continued_growth_K(R + 1.0, p))


def bounding_rectangle(z0: complex, R: float, trap: TrapSet, p: Parameter,
                       margin: float = 1.0) -> Rectangle:
    """Rectangle containing the component of z0 in the complement of X.  The
    left side sits at -max(c, R): points of the half-plane inside D(0, R)
    fail the k = 0 condition and may belong to that component."""
    return Rectangle(re_min=-max(trap.c, R) - margin,
                     re_max=right_bound(R, p) + margin,
                     im_abs_max=R + strip_delta(trap) + margin)


# ---------------------------------------------------------- X membership

@dataclass(frozen=True)
class XEvidence:
    member: bool
    first_trap_index: int | None
    threshold_indices: tuple
    failed_at: int | None


def x_membership(z: complex, trap: TrapSet, R: float, p: Parameter, depth: int,
                 thresholds: Thresholds | None = None) -> XEvidence:
    """Membership in X_depth: for every k <= depth either |f^k(z)| >= M^k(R)
    (checked against the upper bracket) or the orbit met the trap at some j < k."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    thr = thresholds or Thresholds.make(R, p, depth)
    w = complex(z)
    err = 0.0
    passed = []
    trap_j = None
    for k in range(depth + 1):
        if trap_j is not None:
            break
        if abs(w) - err >= thr.value[k]:
            passed.append(k)
        else:
            return XEvidence(False, None, tuple(passed), k)
        if k == depth:
            break
        reliable = err <= RELIABILITY * max(1.0, abs(w))
        if reliable and trap.contains(w, err):
            trap_j = k
            continue
        if w.real > LOG_MAX:
            step = overflow_step(w, err, p, trap.c, thr, k, depth)
            passed.extend(step.passed)
            if step.failed_at is not None:
                return XEvidence(False, None, tuple(passed), step.failed_at)
            return XEvidence(True, step.trap_index, tuple(passed), None)
        e = cmath.exp(w)
        wn = e + p.a
        err = abs(e) * err * math.exp(min(err, 50.0)) + 4.0 * EPS * (abs(e) + abs(wn))
        w = wn
    return XEvidence(True, trap_j, tuple(passed), None)


# ----------------------------------------------------------- certificate

@dataclass(frozen=True)
class SampleRecord:
    z: complex
    member: bool
    first_trap_index: int | None
    threshold_indices: tuple
    side: str

    def as_dict(self) -> dict:
        d = {"z": [self.z.real, self.z.imag],
             "verdict": "member" if self.member else "violation"}
        if self.first_trap_index is not None:
            d["first_trap_index"] = self.first_trap_index
        d["threshold_indices"] = list(self.threshold_indices)
        return d


@dataclass(frozen=True)
class SeparationCertificate:
    a: complex
    eps: float
    z0: complex
    R: float
    depth: int
    c: float
    delta: float
    rectangle: Rectangle
    samples: tuple
    spacing: float
    winding_number: int
    tool_version: str = __version__

    @property
    def boundary_samples(self):
        return [s.z for s in self.samples]

    @property
    def verified(self) -> bool:
        return all(s.member for s in self.samples)

    def as_dict(self) -> dict:
        return {
            "parameter": [self.a.real, self.a.imag],
            "eps": self.eps,
            "z0": [self.z0.real, self.z0.imag],
            "R": self.R,
            "depth": self.depth,
            "c": self.c,
            "delta": self.delta,
            "rectangle": self.rectangle.as_dict(),
            "samples": [s.as_dict() for s in self.samples],
            "spacing": self.spacing,
            "winding_number": self.winding_number,
            "tool_version": self.tool_version,
        }


@dataclass
class EnclosingCurve:
    sides: dict  # side name -> sample array, in traversal order
    detours: list
    x_cut: float
    rho: float

    def closed(self) -> np.ndarray:
        return np.concatenate([self.sides[k] for k in ("bottom", "right", "top", "left")])


def _arc_crossing(arc: np.ndarray, x: float):
    """Index i and point where the polyline last crosses Re = x upward."""
    below = arc.real < x
    idx = np.nonzero(below[:-1] & ~below[1:])[0]
    if idx.size == 0:
        raise CertificateError(f"arc does not cross Re = {x}")
    i = int(idx.max())
    p0, p1 = arc[i], arc[i + 1]
    t = (x - p0.real) / (p1.real - p0.real)
    pt = complex(x, p0.imag + t * (p1.imag - p0.imag))
    return i, pt


def _circle_crossing(arc: np.ndarray, center: complex, radius: float):
    """First point where the polyline leaves the disc |u - center| < radius."""
    out = np.abs(arc - center) >= radius
    if out[0]:
        raise CertificateError("trap arc root lies outside the cut circle")
    j = int(np.argmax(out))
    if not out[j]:
        raise CertificateError("trap arc never meets the cut circle")
    lo, hi = complex(arc[j - 1]), complex(arc[j])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if abs(mid - center) < radius:
            lo = mid
        else:
            hi = mid
    return j, hi


def _base_with_tail(trap: TrapSet, re_to: float) -> np.ndarray:
    b = trap.base_arc
    if b[-1].real < re_to:
        b = np.concatenate((b, [complex(re_to + 1.0, trap.tail_im)]))
    return b


def enclosing_curve(z0: complex, trap: TrapSet, R: float, p: Parameter, rect: Rectangle,
                    thresholds: Thresholds, samples_per_side: int,
                    margin: float = 1.0) -> EnclosingCurve:
    """Closed curve around z0 made of pieces that lie in X by construction:
    a vertical line in the half-plane, two trap-arc translates, horizontal
    connectors in the half-plane and a vertical cut on which |f| is huge.
    Where the image of the cut enters the critical band -c < Re u < rho the
    cut makes a detour along the preimage of a trap arc."""
    a = p.a
    c = trap.c
    N = samples_per_side
    x_left = rect.re_min + 0.5 * margin
    x_cut = rect.re_max - 0.5 * margin
    E = math.exp(x_cut)
    # iterates that leave D(0, M^1) through growth must clear M^2 at the next step
    M2 = thresholds.brackets[2].upper.to_float()
    rho = math.log(M2 + p.abs_a) + 20.0
    if E < 4.0 * (rho + abs(a.real) + c + 10.0):
        raise CertificateError("cut too close to the origin for the detour construction")
    base = _base_with_tail(trap, max(x_cut, rho) + 10.0)

    k_top = math.ceil((R - trap.inf_im) / TWO_PI)
    k_bot = math.floor((-R - trap.sup_im) / TWO_PI)
    top_arc = base + 1j * TWO_PI * k_top
    bot_arc = base + 1j * TWO_PI * k_bot
    it, zt = _arc_crossing(top_arc, x_cut)
    ib, zb = _arc_crossing(bot_arc, x_cut)
    top_path = np.concatenate((top_arc[:it + 1], [zt]))
    bot_path = np.concatenate((bot_arc[:ib + 1], [zb]))
    if abs(zb.real - zt.real) > 1e-9:
        raise CertificateError("cut endpoints misaligned")

    # ---- detours on the cut, parameterized by y = Im z
    y_lo, y_hi = zb.imag, zt.imag
    lo_cos = (-c - a.real) / E
    hi_cos = (rho - a.real) / E
    if not (-1.0 < lo_cos < hi_cos < 1.0):
        raise CertificateError("band does not fit on the cut circle")
    alpha_hi, alpha_lo = math.acos(hi_cos), math.acos(lo_cos)
    bands = []
    j0 = math.floor((y_lo - math.pi) / TWO_PI) - 1
    j1 = math.ceil((y_hi + math.pi) / TWO_PI) + 1
    for j in range(j0, j1 + 1):
        for kind, (s0, s1) in (("upper", (alpha_hi, alpha_lo)), ("lower", (-alpha_lo, -alpha_hi))):
            b0, b1 = s0 + TWO_PI * j, s1 + TWO_PI * j
            if b1 < y_lo or b0 > y_hi:
                continue
            if b0 <= y_lo or b1 >= y_hi:
                raise CertificateError("band touches the end of the cut")
            bands.append((kind, j, b0, b1))
    bands.sort(key=lambda t: t[2])

    centre_y = a.imag
    circle_top = centre_y + E
    circle_bot = centre_y - E
    X_in = rho + 1.0
    half_chord = math.sqrt(E * E - (X_in - a.real) ** 2)
    ubase = _base_with_tail(trap, E + abs(a.real) + 10.0)
    detours = []
    cuts = []
    y_cursor = y_lo
    for kind, j, b0, b1 in bands:
        if kind == "upper":
            k = math.floor((centre_y + half_chord - 1.0 - trap.sup_im) / TWO_PI)
        else:
            k = math.ceil((centre_y - half_chord + 1.0 - trap.inf_im) / TWO_PI)
        arc = ubase + 1j * TWO_PI * k
        jx, u1 = _circle_crossing(arc, a, E)
        if u1.real < rho:
            raise CertificateError("trap arc meets the cut circle inside the band")
        root = complex(arc[0])
        dy = root.imag - centre_y
        if abs(dy) >= E:
            raise CertificateError("trap arc root outside the circle")
        u2 = complex(a.real - math.sqrt(E * E - dy * dy), root.imag)
        if u2.real > -c:
            raise CertificateError("connector does not reach the half-plane")
        arc_piece = np.concatenate((arc[:jx], [u1]))
        conn = np.linspace(root, u2, 64)
        if kind == "upper":
            upath = np.concatenate((arc_piece[::-1], conn[1:]))
        else:
            upath = np.concatenate((conn[::-1], arc_piece[1:]))
        # sample in the u-plane so that f maps each sample onto the trap arc
        upath = resample(upath, max(16, N // 16) + 2)
        y_mid = 0.5 * (b0 + b1)
        zpath = pull_back(upath, a, complex(x_cut, y_mid))
        y_in, y_out = zpath[0].imag, zpath[-1].imag
        if not (y_cursor < y_in < b0 and b1 < y_out < y_hi):
            raise CertificateError("detour endpoints out of order on the cut")
        zpath[0] = complex(x_cut, y_in)
        zpath[-1] = complex(x_cut, y_out)
        cuts.append((y_cursor, y_in))
        detours.append(zpath)
        y_cursor = y_out
    cuts.append((y_cursor, y_hi))

    # ---- sampling
    cut_len = sum(b - a_ for a_, b in cuts)
    right = []
    for i, (ya, yb) in enumerate(cuts):
        m = max(2, int(round(N * (yb - ya) / cut_len)))
        right.append(x_cut + 1j * np.linspace(ya, yb, m))
        if i < len(detours):
            right.append(detours[i][1:-1])
    right = np.concatenate(right)
    bottom = np.concatenate((np.linspace(complex(x_left, bot_path[0].imag), bot_path[0], N // 8)[:-1],
                             resample(bot_path, N - N // 8 + 1)))
    top_rev = top_path[::-1]
    top = np.concatenate((resample(top_rev, N - N // 8 + 1),
                          np.linspace(top_path[0], complex(x_left, top_path[0].imag), N // 8)[1:]))
    left = np.linspace(complex(x_left, top_path[0].imag), complex(x_left, bot_path[0].imag), N)
    # drop duplicated corners so the closed curve lists each point once
    sides = {"bottom": bottom, "right": right[1:-1], "top": top, "left": left[1:-1]}
    return EnclosingCurve(sides=sides, detours=detours, x_cut=x_cut, rho=rho)


def _verify_samples(zs, trap, R, p, depth, thr, threads):
    zs = list(zs)
    chunks = [zs[i:i + 256] for i in range(0, len(zs), 256)]

    def work(chunk):
        return [x_membership(z, trap, R, p, depth, thr) for z in chunk]

    n = thread_count(threads)
    if n == 1:
        parts = [work(ch) for ch in chunks]
    else:
        with ThreadPoolExecutor(max_workers=n) as ex:
            parts = list(ex.map(work, chunks))
    return [e for part in parts for e in part]


@dataclass
class TrapConstruction:
    p: Parameter
    cycle: Cycle
    eps: float
    sigma: AccessArc
    trap: TrapSet
    R: float
    rectangle: Rectangle


def build_construction(z0: complex, p: Parameter, eps: float, cycle: Cycle | None = None,
                       height: float | None = None, margin: float = 1.0) -> TrapConstruction:
    cycle = cycle or find_cycle(p)
    if cycle.kind != "attracting":
        raise ValueError(f"parameter has no attracting cycle (kind={cycle.kind})")
    sigma = build_access_arc(p, cycle, eps, height=height)
    trap = build_trap(p, eps, sigma)
    R = choose_R(z0, trap, p)
    rect = bounding_rectangle(z0, R, trap, p, margin)
    return TrapConstruction(p, cycle, eps, sigma, trap, R, rect)


def separation_certificate(z0: complex, p: Parameter, eps: float, depth: int = 3,
                           samples_per_side: int = 512, cycle: Cycle | None = None,
                           height: float | None = None, margin: float = 1.0,
                           threads: int | None = None, strict: bool = True,
                           construction: TrapConstruction | None = None):
    """Run the whole pipeline and verify every curve sample in X_depth.

    Raises CertificateError listing the violating samples when ``strict``."""
    if depth < 2:
        raise ValueError("depth must be >= 2")
    z0 = complex(z0)
    con = construction or build_construction(z0, p, eps, cycle, height, margin)
    trap, R, rect = con.trap, con.R, con.rectangle
    if not (rect.re_min <= -trap.c < z0.real or rect.contains(z0)):
        raise CertificateError("z0 not inside the rectangle")
    thr = Thresholds.make(R, p, max(depth, 2))
    curve = enclosing_curve(z0, trap, R, p, rect, thr, samples_per_side, margin)
    closed = curve.closed()
    outside = [z for z in closed if not rect.contains(complex(z))]
    if outside:
        raise CertificateError("enclosing curve leaves the rectangle", outside[:10])
    wn = winding_number(closed, z0)
    if wn == 0:
        raise CertificateError("enclosing curve does not wind around z0")
    thr_d = Thresholds.make(R, p, depth)
    records = []
    for side in ("bottom", "right", "top", "left"):
        pts = curve.sides[side]
        ev = _verify_samples(pts, trap, R, p, depth, thr_d, threads)
        for z, e in zip(pts, ev):
            records.append(SampleRecord(complex(z), e.member, e.first_trap_index,
                                        e.threshold_indices, side))
    spacing = float(np.max(np.abs(np.diff(np.concatenate((closed, closed[:1]))))))
    cert = SeparationCertificate(a=p.a, eps=eps, z0=z0, R=R, depth=depth, c=trap.c,
                                 delta=strip_delta(trap), rectangle=rect,
                                 samples=tuple(records), spacing=spacing,
                                 winding_number=wn)
    bad = [r for r in records if not r.member]
    if bad and strict:
        raise CertificateError(f"{len(bad)} of {len(records)} samples fail X_{depth}", bad)
    return cert


# ----------------------------------------------- traps from Julia parameters

@dataclass(frozen=True)
class JuliaTrap:
    trap: TrapSet
    zeta: complex
    n: int
    sigma0: np.ndarray
    sigma: AccessArc


def avoids_singular_value(z: complex, p: Parameter, eps: float, n: int) -> bool:
    """min over k <= n of |f^k(z) - a| > eps (computed part of the orbit)."""
    w = complex(z)
    for _ in range(n + 1):
        if abs(w - p.a) <= eps:
            return False
        if w.real > LOG_MAX:
            return True
        w = cmath.exp(w) + p.a
    return True


def trap_from_julia(p: Parameter, eps: float, c: float | None = None, max_n: int = 12,
                    grid: int = 64) -> JuliaTrap:
    """Trap for the avoid-the-singular-value predicate: find zeta in D(a, eps)
    whose orbit reaches Re <= -c, run a horizontal ray from there to the far
    left and pull it back along the orbit of zeta."""
    a = p.a
    if c is None:
        c = -math.log(eps)
    xs = np.linspace(-eps, eps, grid + 2)[1:-1]
    X, Y = np.meshgrid(xs, xs)
    pts = (a + X + 1j * Y).ravel()
    pts = pts[np.abs(pts - a) < eps]
    w = pts.copy()
    orbits = [w.copy()]
    hit_n, hit_i = None, None
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, max_n + 1):
            w = np.exp(w) + a
            orbits.append(w.copy())
            hit = np.nonzero(np.isfinite(w) & (w.real <= -c))[0]
            if hit.size:
                hit_n, hit_i = n, int(hit[0])
                break
    if hit_n is None:
        raise SearchExhausted(f"no point of the {grid}x{grid} grid in D(a, eps) reaches "
                              f"Re <= -c within {max_n} iterates")
    zeta_orbit = [complex(o[hit_i]) for o in orbits]
    wn = zeta_orbit[-1]
    d = np.concatenate(([0.0], np.geomspace(1e-3, FAR, 800)))
    sigma0 = wn.real - d + 1j * wn.imag
    sing = [a]
    for _ in range(hit_n - 1):
        sing.append(cmath.exp(sing[-1]) + a)
    for s in sing[:hit_n]:
        if float(np.min(np.abs(sigma0 - s))) < 1e-3:
            raise PullbackError("sigma0 passes too close to the singular orbit")
    curve = sigma0
    for j in range(hit_n, 0, -1):
        curve = pull_back(curve if j == hit_n else extend_tail(curve), a, zeta_orbit[j - 1])
    curve = extend_tail(curve)
    sigma_v = _last_exit(curve, a, eps)
    sigma = AccessArc(sigma_v, _monotone_from(sigma_v), eps,
                      {"zeta": zeta_orbit[0], "n": hit_n})
    trap = build_trap(p, eps, sigma)
    if abs(trap.c - c) > 1e-12:
        trap = TrapSet(a=trap.a, c=c, base_arc=trap.base_arc, tail_im=trap.tail_im,
                       inf_im=trap.inf_im, sup_im=trap.sup_im, delta=trap.delta)
    return JuliaTrap(trap, zeta_orbit[0], hit_n, sigma0, sigma)

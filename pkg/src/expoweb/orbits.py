"""Orbits of f_a, cycle detection for the singular value, and depth-bounded
point classification (basin / A_R verified / escaping / meandering)."""
from __future__ import annotations

import cmath
import math
import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .growth import (GrowthConstants, MBracket, Parameter, continued_growth_K,
                     max_modulus_iter)
from .tower import LOG_MAX, TowerValue, as_tower, iterate_F

EPS = 2.0 ** -52
BAILOUT = 1e300
BASIN_TOL = 1e-8
# orbit is abandoned once the propagated error exceeds this fraction of max(1, |w|)
RELIABILITY = 1e-6
PARABOLIC_WINDOW = 100


class Label(Enum):
    BASIN = 0
    A_R_VERIFIED = 1
    ESCAPING_NUMERICAL = 2
    MEANDERING_CANDIDATE = 3
    UNDECIDED = 4

    @property
    def text(self) -> str:
        return {0: "basin", 1: "A_R_verified", 2: "escaping_numerical",
                3: "meandering_candidate", 4: "undecided"}[self.value]


LABEL_CODES = {lab.value: lab for lab in Label}


@dataclass(frozen=True)
class Orbit:
    start: complex
    points: tuple
    terminated_by: str  # depth-exhausted | overflow | basin-converged | trap-entered


def iterate_map(z: complex, p: Parameter, n: int, bailout: float = BAILOUT) -> Orbit:
    if n < 0 or not bailout > 0:
        raise ValueError("need n >= 0 and bailout > 0")
    w = complex(z)
    pts = [w]
    for _ in range(n):
        if abs(w) > bailout or w.real > LOG_MAX:
            return Orbit(complex(z), tuple(pts), "overflow")
        w = cmath.exp(w) + p.a
        pts.append(w)
    if abs(w) > bailout:
        return Orbit(complex(z), tuple(pts), "overflow")
    return Orbit(complex(z), tuple(pts), "depth-exhausted")


# ------------------------------------------------------------------ cycles

@dataclass(frozen=True)
class Cycle:
    period: int
    points: tuple
    multiplier: complex
    kind: str  # attracting | parabolic-suspect | none
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def attracting(self) -> bool:
        return self.kind == "attracting"

    @staticmethod
    def none(reason: str) -> "Cycle":
        return Cycle(0, (), 0j, "none", {"reason": reason})


def _cycle_of(z: complex, p: Parameter, q: int):
    pts = [z]
    lam = 1 + 0j
    for _ in range(q):
        e = cmath.exp(pts[-1])
        lam *= e
        pts.append(e + p.a)
    return pts, lam


def _refine(z: complex, p: Parameter, q: int, tol: float, iters: int = 200):
    """Newton on f^q(z) - z."""
    for _ in range(iters):
        pts, lam = _cycle_of(z, p, q)
        g = pts[-1] - z
        d = lam - 1.0
        if d == 0:
            break
        step = g / d
        z = z - step
        if abs(step) <= tol * max(1.0, abs(z)):
            break
    return z


def find_cycle(p: Parameter, max_iter: int = 10000, tol: float = 1e-15,
               max_period: int = 64) -> Cycle:
    """Follow the singular orbit of a and identify the cycle it settles on."""
    w = p.a
    hist = deque([w], maxlen=2 * max_period + 2)
    period = 0
    for i in range(1, max_iter + 1):
        if w.real > LOG_MAX:
            return Cycle.none("singular orbit escapes")
        w = cmath.exp(w) + p.a
        if not (math.isfinite(w.real) and math.isfinite(w.imag)):
            return Cycle.none("singular orbit escapes")
        hist.append(w)
        if i % 16 == 0 and len(hist) > max_period + 1:
            period = _detect_period(hist, max_period, 1e-10)
            if period:
                break
    loose = False
    if not period:
        period = _detect_period(hist, max_period, 1e-5)
        loose = True
        if not period:
            return Cycle.none("singular orbit does not settle")
    z = _refine(hist[-1], p, period, min(tol, 1e-12))
    pts, lam = _cycle_of(z, p, period)
    closing = abs(pts[-1] - pts[0])
    diag = {"iterations": i, "closing_error": closing, "loose_detection": loose}
    if closing > 1e-10 * max(1.0, abs(z)) or not math.isfinite(closing):
        diag["refinement"] = "diverged"
        pts, lam = _cycle_of(hist[-period], p, period)
    points = tuple(pts[:period])
    mod = abs(lam)
    if abs(mod - 1.0) <= 1e-6:
        kind = "parabolic-suspect"
    elif mod < 1.0:
        kind = "attracting"
    else:
        kind = "none"
        diag["reason"] = "multiplier outside the unit disc"
    return Cycle(period, points, lam, kind, diag)


def _detect_period(hist, max_period: int, rel: float) -> int:
    h = list(hist)
    last = h[-1]
    scale = max(1.0, abs(last))
    for q in range(1, max_period + 1):
        if len(h) < 2 * q + 1:
            break
        if all(abs(h[-1 - j] - h[-1 - j - q]) <= rel * scale for j in range(q + 1)):
            return q
    return 0


# ----------------------------------------------------------- classification

@dataclass(frozen=True)
class PointClass:
    label: Label
    depth_used: int
    evidence: dict

    def __str__(self):
        if self.label in (Label.A_R_VERIFIED, Label.MEANDERING_CANDIDATE):
            return f"{self.label.text}({self.depth_used})"
        return self.label.text


@dataclass
class Thresholds:
    """Per-step comparison data derived from the M^k(R) brackets."""
    R: float
    depth: int
    brackets: list
    value: np.ndarray  # float threshold for a computed |w_k| (inf if unreachable)
    log_value: np.ndarray  # threshold on Re w_{k-1} when w_k overflows

    @staticmethod
    def make(R: float, p: Parameter, depth: int, K: float = 1.0) -> "Thresholds":
        brs = [max_modulus_iter(R, p, k, K) for k in range(depth + 2)]
        vals = np.array([b.upper.to_float() for b in brs])
        logs = np.full(depth + 2, np.inf)
        for k, b in enumerate(brs):
            logs[k] = overflow_log_threshold(b.upper, p.abs_a)
        return Thresholds(R, depth, brs, vals, logs)


def overflow_log_threshold(upper: TowerValue, abs_a: float) -> float:
    """Smallest L (rounded up) with e^L - |a| >= upper, or inf."""
    if upper.level == 0:
        L = math.log(upper.base + abs_a)
    elif upper.level == 1:
        L = upper.base
    else:
        return math.inf
    for _ in range(4):
        L = math.nextafter(L, math.inf)
    return L


@dataclass(frozen=True)
class OverflowStep:
    passed: tuple
    trap_index: int | None
    failed_at: int | None


def overflow_step(w: complex, err: float, p: Parameter, c: float | None,
                  thr: "Thresholds", k: int, depth: int) -> OverflowStep:
    """Finish a threshold check once w = f^k(z) is too large to exponentiate.

    w' = f(w) is known only in polar form, |w' - a| = e^{Re w} and
    arg(w' - a) = Im w, the latter with the same absolute error as w.  That
    settles |w'| and the sign of Re w'; when Re w' is certainly positive it
    also bounds |f(w')| >= e^{Re w'} - |a|.  Nothing further is claimed.
    ``c`` enables the half-plane trap test for w' (None skips it)."""
    passed = []
    if k + 1 > depth:
        return OverflowStep((), None, None)
    if w.real - err < thr.log_value[k + 1]:
        return OverflowStep((), None, k + 1)
    passed.append(k + 1)
    if k + 1 == depth:
        return OverflowStep(tuple(passed), None, None)
    cs = math.cos(w.imag)
    slack = err + 8.0 * EPS * max(1.0, abs(w.imag))
    big = w.real - err  # log of a lower bound for |w' - a|
    if c is not None and cs < -slack:
        # Re w' <= -e^{big} |cos| + Re a
        if big + math.log(-cs - slack) > math.log(c + abs(p.a.real) + 1.0):
            return OverflowStep(tuple(passed), k + 1, None)
    if cs > slack:
        L = big + math.log(cs - slack)  # Re w' >= e^L - |a|
        need = thr.log_value[k + 2]
        if math.isfinite(need) and L > math.log(need + p.abs_a) + 1e-12 * max(1.0, abs(L)):
            passed.append(k + 2)
            if k + 2 == depth:
                return OverflowStep(tuple(passed), None, None)
            return OverflowStep(tuple(passed), None, k + 3)
    return OverflowStep(tuple(passed), None, k + 2)


def polar_continuation(w, err):
    """Stand-in for f(w) when e^w overflows but lands far to the left.

    With cos(Im w) certainly negative and Re f(w) <= -800, f(f(w)) equals a to
    float precision, so any point with that property continues the orbit
    correctly.  The stand-in -(e^L - |a|) also under-reports |f(w)|.
    Returns NaN where no such conclusion is possible."""
    w = np.asarray(w, dtype=np.complex128)
    err = np.asarray(err, dtype=float)
    cs = np.cos(w.imag)
    slack = err + 8.0 * EPS * np.maximum(1.0, np.abs(w.imag))
    with np.errstate(invalid="ignore", divide="ignore"):
        L = w.real - err + np.log(np.where(cs < -slack, -cs - slack, np.nan))
    ok = (L > math.log(800.0)) & (err < 0.1)
    return np.where(ok, -np.exp(np.minimum(L, 690.0)), np.nan)


def _orbit_kernel(z: np.ndarray, a: complex, thr: Thresholds, cycle: Cycle | None,
                  max_iter: int, basin_tol: float = BASIN_TOL) -> dict:
    """Vectorized classification of a flat complex array."""
    with np.errstate(over="ignore", invalid="ignore"):
        return _kernel_body(z, a, thr, cycle, max_iter, basin_tol)


def _kernel_body(z, a, thr, cycle, max_iter, basin_tol):
    n = z.size
    depth = thr.depth
    w = z.astype(np.complex128).copy()
    err = np.zeros(n)
    ar_upto = np.zeros(n, dtype=np.int64)  # number of verified k (0..ar_upto-1)
    ar_fail = np.zeros(n, dtype=bool)
    label = np.full(n, Label.UNDECIDED.value, dtype=np.int8)
    stop = np.full(n, -1, dtype=np.int64)
    reason = np.zeros(n, dtype=np.int8)  # 1 basin 2 overflow 3 unreliable 4 max_iter
    nearest = np.full(n, -1, dtype=np.int8)
    active = np.arange(n)
    attracting = cycle is not None and cycle.kind == "attracting"
    parabolic = cycle is not None and cycle.kind == "parabolic-suspect"
    cpts = np.array(cycle.points, dtype=np.complex128) if (attracting or parabolic) else None
    if parabolic:
        win_prev = np.full(n, np.inf)
        win_cur = np.zeros(n)

    def finish(idx, lab, why, step):
        label[idx] = lab
        reason[idx] = why
        stop[idx] = step

    for step in range(max_iter + 1):
        if active.size == 0:
            break
        wk = w[active]
        ek = err[active]
        absw = np.abs(wk)
        finite = np.isfinite(wk.real) & np.isfinite(wk.imag) & np.isfinite(ek)
        bad = ~finite | (ek > RELIABILITY * np.maximum(1.0, absw))
        keep = ~bad
        if bad.any():
            idx = active[bad]
            lab = np.where(ar_upto[idx] > depth, Label.A_R_VERIFIED.value,
                           np.where(ar_fail[idx], Label.MEANDERING_CANDIDATE.value,
                                    Label.UNDECIDED.value))
            finish(idx, lab, 3, step)
        active, wk, ek, absw = active[keep], wk[keep], ek[keep], absw[keep]

        if step <= depth and active.size:
            due = (ar_upto[active] == step) & ~ar_fail[active]
            ok = (absw - ek) >= thr.value[step]
            ar_upto[active[due & ok]] += 1
            ar_fail[active[due & ~ok]] = True

        if cpts is not None and active.size:
            d = np.abs(wk[:, None] - cpts[None, :])
            dmin = d.min(axis=1)
            if attracting:
                inb = dmin <= basin_tol
            else:
                win_cur[active] += dmin
                inb = np.zeros(active.size, dtype=bool)
                if step % PARABOLIC_WINDOW == PARABOLIC_WINDOW - 1:
                    cur = win_cur[active]
                    inb = (cur < win_prev[active]) & (cur < 1e-2 * PARABOLIC_WINDOW)
                    win_prev[active] = cur
                    win_cur[active] = 0.0
            if inb.any():
                idx = active[inb]
                nearest[idx] = d[inb].argmin(axis=1)
                finish(idx, Label.BASIN.value, 1, step)
                keep = ~inb
                active, wk, ek, absw = active[keep], wk[keep], ek[keep], absw[keep]

        if active.size == 0:
            break
        ovf = (wk.real > LOG_MAX) | (absw > BAILOUT)
        if ovf.any():
            idx = active[ovf]
            if step + 1 <= depth:
                due = np.nonzero((ar_upto[idx] == step + 1) & ~ar_fail[idx])[0]
                wo, eo = wk[ovf], ek[ovf]
                for i in due:
                    st = overflow_step(complex(wo[i]), float(eo[i]), _P(a), None, thr, step, depth)
                    ar_upto[idx[i]] += len(st.passed)
                    if st.failed_at is not None:
                        ar_fail[idx[i]] = True
            jump = polar_continuation(wk[ovf], ek[ovf]) - abs(a)
            cont = np.isfinite(jump) & (step < max_iter)
            stopped = idx[~cont]
            lab = np.where(ar_upto[stopped] > depth, Label.A_R_VERIFIED.value,
                           Label.ESCAPING_NUMERICAL.value)
            finish(stopped, lab, 2, step)
            ovf_cont = np.zeros(ovf.size, dtype=bool)
            ovf_cont[np.nonzero(ovf)[0][cont]] = True
            keep = ~ovf | ovf_cont
            wk = np.where(ovf_cont, 0.0, wk)
            jumps = np.zeros(ovf.size)
            jumps[ovf_cont] = jump[cont]
            active, wk, ek, jumps, ovf_cont = (active[keep], wk[keep], ek[keep],
                                               jumps[keep], ovf_cont[keep])
        else:
            ovf_cont = np.zeros(active.size, dtype=bool)
            jumps = np.zeros(active.size)
        if step == max_iter or active.size == 0:
            break
        e = np.exp(wk)
        ae = np.abs(e)
        wn = e + a
        en = ae * ek * np.exp(np.minimum(ek, 50.0)) + 4.0 * EPS * (ae + np.abs(wn))
        wn = np.where(ovf_cont, jumps + 0j, wn)
        en = np.where(ovf_cont, 0.0, en)
        w[active] = wn
        err[active] = en

    if active.size:
        lab = np.where(ar_upto[active] > depth, Label.A_R_VERIFIED.value,
                       np.where(ar_fail[active], Label.MEANDERING_CANDIDATE.value,
                                Label.UNDECIDED.value))
        finish(active, lab, 4, max_iter)
    return {"label": label, "stop": stop, "reason": reason, "ar_upto": ar_upto,
            "nearest": nearest}


def _P(a):
    return Parameter(a)


REASONS = {1: "basin-converged", 2: "overflow", 3: "reliability-lost", 4: "max-iter"}


def classify_point(z: complex, p: Parameter, cfg: GrowthConstants, depth: int,
                   cycle: Cycle | None, max_iter: int = 500,
                   thresholds: Thresholds | None = None) -> PointClass:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    thr = thresholds or Thresholds.make(cfg.R, p, depth, cfg.K)
    out = _orbit_kernel(np.array([complex(z)]), p.a, thr, cycle, max_iter)
    lab = LABEL_CODES[int(out["label"][0])]
    ev = {
        "stopped_at": int(out["stop"][0]),
        "stop_reason": REASONS.get(int(out["reason"][0]), "none"),
        "thresholds_verified": int(out["ar_upto"][0]),
        "R": cfg.R,
    }
    if cycle is not None and cycle.kind == "parabolic-suspect":
        ev["parabolic_heuristic"] = True
    return PointClass(lab, depth, ev)


def thread_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("EXPOWEB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, min(8, os.cpu_count() or 1))


def classify_grid(z: np.ndarray, p: Parameter, cfg: GrowthConstants, depth: int,
                  cycle: Cycle | None, max_iter: int = 500, threads: int | None = None,
                  tile_rows: int = 32, thresholds: Thresholds | None = None) -> dict:
    """Classify a 2-d array of points; tiles run in parallel and are merged
    in fixed row order, so output does not depend on the thread count."""
    z = np.asarray(z, dtype=np.complex128)
    if z.ndim == 1:
        z = z[None, :]
    thr = thresholds or Thresholds.make(cfg.R, p, depth, cfg.K)
    rows = z.shape[0]
    tiles = [(r0, min(rows, r0 + tile_rows)) for r0 in range(0, rows, tile_rows)]

    def work(t):
        r0, r1 = t
        return _orbit_kernel(z[r0:r1].ravel(), p.a, thr, cycle, max_iter)

    nthreads = thread_count(threads)
    if nthreads == 1:
        parts = [work(t) for t in tiles]
    else:
        with ThreadPoolExecutor(max_workers=nthreads) as ex:
            parts = list(ex.map(work, tiles))
    out = {}
    for key in parts[0]:
        out[key] = np.concatenate([q[key] for q in parts]).reshape(z.shape)
    return out


# ------------------------------------------------------ certified escape

@dataclass(frozen=True)
class EscapeShift:
    certified: bool
    m: int | None
    n: int
    bound: TowerValue | None
    reason: str


def certified_escape_shift(z: complex, p: Parameter, R: float, depth: int) -> EscapeShift:
    """Certificate that |f^{m+k}(z)| >= F^k(Re w_m - 2) >= M^k(R) for k <= n,
    using the side conditions on the computable part of the orbit."""
    mu = R + 1.0
    start = max(R + 3.0, continued_growth_K(mu, p))
    orb = iterate_map(z, p, depth, bailout=math.inf)
    pts = [w for w in orb.points if math.isfinite(abs(w))]
    m = next((i for i, w in enumerate(pts) if w.real >= start), None)
    if m is None:
        return EscapeShift(False, None, 0, None, f"no computed iterate reaches Re >= {start}")
    n = 0
    for k, w in enumerate(pts[m:]):
        if as_tower(max(-w.real, abs(w.imag))) > iterate_F(mu, k):
            break
        n = k + 1
    if n == 0:
        return EscapeShift(False, m, 0, None, "side condition fails at the first qualifying iterate")
    bound = iterate_F(pts[m].real - 2.0, n)
    if bound < max_modulus_iter(R, p, n).upper:
        return EscapeShift(False, m, n, None, "bound does not dominate M^n(R)")
    return EscapeShift(True, m, n, bound, "ok")


def basin_test(z, p: Parameter, cycle: Cycle, max_iter: int = 2000) -> np.ndarray:
    """True where the orbit reaches the BASIN_TOL ball of an attracting cycle."""
    if cycle.kind != "attracting":
        raise ValueError("basin test needs an attracting cycle")
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128)).ravel()
    cpts = np.array(cycle.points, dtype=np.complex128)
    done = np.zeros(z.size, dtype=bool)
    w = z.copy()
    active = np.arange(z.size)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(max_iter + 1):
            wk = w[active]
            hit = np.abs(wk[:, None] - cpts[None, :]).min(axis=1) <= BASIN_TOL
            done[active[hit]] = True
            jump = polar_continuation(wk, np.zeros(wk.size)) - p.abs_a
            far = wk.real > LOG_MAX
            alive = ~hit & np.isfinite(wk) & (~far | np.isfinite(jump))
            active, far, jump = active[alive], far[alive], jump[alive]
            if active.size == 0:
                break
            nxt = np.exp(np.where(far, 0.0, w[active])) + p.a
            w[active] = np.where(far, jump + 0j, nxt)
    return done

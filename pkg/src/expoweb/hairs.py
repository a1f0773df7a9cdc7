"""Hairs of disjoint-type maps f_a, a < -1 real, traced by inverse branches.

Address convention: entry s_k selects the branch L_s(w) = Log(w - a) + 2*pi*i*s
(principal Log), so the k-th iterate of a hair point lies near the horizontal
line Im = 2*pi*s_k once its real part is large.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .growth import GrowthConstants, Parameter
from .orbits import Cycle, PointClass, classify_point

TWO_PI = 2.0 * math.pi


class BranchCutError(RuntimeError):
    pass


class HairNotConverged(RuntimeError):
    pass


@dataclass(frozen=True)
class ExternalAddress:
    """Eventually periodic address: ``prefix`` followed by ``period`` repeated."""
    prefix: tuple = ()
    period: tuple = (0,)
    bound: int = 1000

    def __post_init__(self):
        prefix = tuple(int(s) for s in self.prefix)
        period = tuple(int(s) for s in self.period)
        if not period:
            raise ValueError("the repeating tail must be nonempty")
        if any(abs(s) > self.bound for s in prefix + period):
            raise ValueError(f"address entries must satisfy |s| <= {self.bound}")
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "period", period)

    def entry(self, k: int) -> int:
        if k < len(self.prefix):
            return self.prefix[k]
        return self.period[(k - len(self.prefix)) % len(self.period)]

    def entries(self, n: int) -> list[int]:
        return [self.entry(k) for k in range(n)]

    def as_dict(self):
        return {"prefix": list(self.prefix), "period": list(self.period)}

    def __str__(self):
        head = ",".join(map(str, self.prefix))
        tail = ",".join(map(str, self.period))
        return f"({head}{',' if head else ''}[{tail}])"

    @staticmethod
    def parse(text: str) -> "ExternalAddress":
        """'1,0,[0]' or '[0]' style: bracketed part repeats."""
        text = text.strip().strip("()")
        if "[" not in text:
            raise ValueError("address needs a bracketed repeating part, e.g. 1,[0]")
        head, tail = text.split("[", 1)
        tail = tail.rstrip("]")
        prefix = [int(s) for s in head.replace(",", " ").split()]
        period = [int(s) for s in tail.replace(",", " ").split()]
        return ExternalAddress(tuple(prefix), tuple(period))


@dataclass
class HairPolyline:
    """Points run from potential t_max down to the endpoint estimate (last).

    levels[k] is the curve at pullback level k (levels[0] = points).
    sources[k][j] >= 0 means levels[k][j] = L_{s_k}(levels[k + 1][sources[k][j]]);
    -1 marks points of the straight tail added at that level."""
    address: ExternalAddress
    potentials: np.ndarray
    points: np.ndarray
    levels: list
    sources: list
    endpoint_estimate: complex
    endpoint_gap: float
    depth: int

    def pullback_residual(self, p: Parameter) -> float:
        """max |f(levels[k][pulled]) - levels[k+1]|, relative to max(1, |.|)."""
        worst = 0.0
        for k in range(self.depth):
            idx = self.sources[k]
            img = np.exp(self.levels[k][idx >= 0]) + p.a
            tgt = self.levels[k + 1][idx[idx >= 0]]
            worst = max(worst, float(np.max(np.abs(img - tgt) / np.maximum(1.0, np.abs(tgt)))))
        return worst

    def as_dict(self):
        return {
            "address": self.address.as_dict(),
            "points": [{"t": float(t), "re": float(z.real), "im": float(z.imag)}
                       for t, z in zip(self.potentials, self.points)],
            "endpoint": [self.endpoint_estimate.real, self.endpoint_estimate.imag],
            "gap": self.endpoint_gap,
        }


def _branch(w: np.ndarray, a: complex, s: int) -> np.ndarray:
    u = w - a
    if np.any((u.real <= 0) & (np.abs(u.imag) <= 1e-15 * np.abs(u))):
        raise BranchCutError("pullback hit the cut of the principal logarithm")
    crosses = (u.real[1:] < 0) & (u.real[:-1] < 0) & (np.sign(u.imag[1:]) != np.sign(u.imag[:-1]))
    if np.any(crosses):
        raise BranchCutError("polyline crosses the cut of the principal logarithm")
    return np.log(u) + TWO_PI * 1j * s


def _endpoint(addr: ExternalAddress, a: complex, depth: int, t_min: float) -> complex:
    """L_{s_0} o ... o L_{s_{depth-1}} applied to t_min + 2*pi*i*s_depth."""
    w = np.array([t_min + TWO_PI * 1j * addr.entry(depth)])
    for k in range(depth - 1, -1, -1):
        w = _branch(w, a, addr.entry(k))
    return complex(w[0])


def _thin(w: np.ndarray, min_step: float) -> np.ndarray:
    """Indices of points at least min_step from the previously kept one (ends kept)."""
    keep = [0]
    for i in range(1, len(w) - 1):
        if abs(w[i] - w[keep[-1]]) >= min_step:
            keep.append(i)
    keep.append(len(w) - 1)
    return np.array(keep)


def _potential_log(t: np.ndarray, a: complex) -> np.ndarray:
    # the real-axis branch t -> log(t + |a|); equals Re on the all-zeros hair
    return np.log(t + abs(a))


def trace_hair(addr: ExternalAddress, p: Parameter, pullback_depth: int, t_max: float,
               t_min: float = 3.0, max_step: float = 0.05, gap_tol: float | None = None,
               allow_complex: bool = False) -> HairPolyline:
    """Seeds t + 2*pi*i*s_d, t in [t_min, t_max], are pulled back through
    L_{s_{d-1}}, ..., L_{s_0}.  After each pullback the curve is extended by
    the straight tail t + 2*pi*i*s_k out to t_max, so the result covers the
    hair from potential t_max down to the endpoint estimate, which is the
    image of the smallest seed."""
    if pullback_depth < 1:
        raise ValueError("pullback_depth must be >= 1")
    if not (p.is_real and p.a.real < -1.0) and not allow_complex:
        raise ValueError("hairs are traced for real a < -1 only")
    if not t_max > t_min:
        raise ValueError("t_max must exceed t_min")
    a = p.a
    d = pullback_depth

    def tail(k, start):
        n = max(2, int(math.ceil((t_max - start) / max_step)) + 1)
        t = np.linspace(t_max, start, n)
        return t + TWO_PI * 1j * addr.entry(k), t

    cur, pot = tail(d, t_min)
    levels = [cur]
    sources = [np.full(len(cur), -1)]
    for k in range(d - 1, -1, -1):
        keep = _thin(cur, 0.02 * max_step)
        cur, pot = cur[keep], pot[keep]
        levels[0] = cur
        sources[0] = sources[0][keep]
        w = _branch(cur, a, addr.entry(k))
        pot = _potential_log(pot, a)
        top = float(w[0].real)
        if top + max_step < t_max:
            tw, tt = tail(k, top + max_step)
            tt = np.maximum(tt, pot[0])  # keep potentials monotone across the junction
        else:
            tw, tt = np.zeros(0, complex), np.zeros(0)
        cur = np.concatenate((tw, w))
        pot = np.concatenate((tt, pot))
        levels.insert(0, cur)
        sources.insert(0, np.concatenate((np.full(len(tw), -1), np.arange(len(w)))))
    end = complex(cur[-1])
    prev = _endpoint(addr, a, d - 1, t_min)
    gap = abs(end - prev)
    if gap_tol is not None and gap > gap_tol:
        raise HairNotConverged(f"endpoint gap {gap:.3e} exceeds {gap_tol:.1e} at depth {d}")
    return HairPolyline(address=addr, potentials=pot, points=cur, levels=levels,
                        sources=sources, endpoint_estimate=end, endpoint_gap=gap, depth=d)


def endpoint_gaps(addr: ExternalAddress, p: Parameter, depths, t_min: float = 3.0) -> list[float]:
    """|endpoint(d) - endpoint(d-1)| for each d in ``depths``."""
    out = []
    for d in depths:
        e1 = _endpoint(addr, p.a, d, t_min)
        e0 = _endpoint(addr, p.a, d - 1, t_min)
        out.append(abs(e1 - e0))
    return out


def orbit_horizon(z: complex, p: Parameter, gap: float, limit: int = 500,
                  tolerance: float = 1e-3) -> int:
    """Number of iterates for which an initial uncertainty ``gap`` stays below
    ``tolerance`` relative, judged by the derivative |(f^n)'(z)|."""
    if gap <= 0:
        return limit
    log_growth = math.log(gap)
    w = complex(z)
    for n in range(limit):
        if w.real > 700:
            return n
        log_growth += w.real  # |f'(w)| = e^{Re w}
        if log_growth > math.log(tolerance * max(1.0, abs(w))):
            return n
        w = complex(np.exp(w)) + p.a
    return limit


def classify_endpoint(h: HairPolyline, p: Parameter, cfg: GrowthConstants, depth: int,
                      cycle: Cycle | None = None, gap_tol: float = 1e-8) -> PointClass:
    """classify_point at the endpoint estimate, stopped once the estimate's own
    uncertainty (the endpoint gap) has been magnified to order one."""
    if h.endpoint_gap > gap_tol:
        raise HairNotConverged(f"endpoint gap {h.endpoint_gap:.3e} above {gap_tol:.1e}")
    n = orbit_horizon(h.endpoint_estimate, p, max(h.endpoint_gap, 1e-16))
    pc = classify_point(h.endpoint_estimate, p, cfg, depth, cycle, max_iter=max(n, depth))
    pc.evidence["horizon"] = n
    return pc

"""Independent recomputations used as test oracles.  Nothing here calls the
package's orbit, threshold or labeling code."""
import math
from collections import deque

import mpmath
import numpy as np

TWO_PI = 2.0 * math.pi


def threshold_logs(R, abs_a, depth):
    """log U_k with U_0 = R and U_k = e^{U_{k-1}} + |a| >= M^k(R)."""
    with mpmath.workdps(60):
        U = mpmath.mpf(R)
        logs = [mpmath.log(U)]
        for _ in range(depth):
            logs.append(U + mpmath.log1p(abs_a * mpmath.exp(-U)))
            U = mpmath.exp(U) + abs_a if U < 1e6 else None
            if U is None:
                break
        return logs


def segment_distance(w, arc):
    p0, p1 = arc[:-1], arc[1:]
    d = p1 - p0
    with np.errstate(over="ignore", invalid="ignore"):
        L2 = np.abs(d) ** 2
        t = np.where(L2 > 0, ((w - p0) * np.conj(d)).real / np.where(L2 > 0, L2, 1), 0)
    t = np.clip(np.nan_to_num(t), 0, 1)
    return float(np.min(np.abs(w - (p0 + t * d))))


def in_trap(w, c, base_arc, tol=1e-9):
    """Half-plane Re w <= -c, or within tol (relative) of a 2*pi*i translate of
    the base arc extended horizontally to the right."""
    if w.real <= -c:
        return True
    arc = np.concatenate((base_arc, [complex(1e150, base_arc[-1].imag)]))
    lo, hi = arc.imag.min(), arc.imag.max()
    k0 = math.floor((w.imag - hi) / TWO_PI) - 1
    k1 = math.ceil((w.imag - lo) / TWO_PI) + 1
    best = min(segment_distance(w - 1j * TWO_PI * k, arc) for k in range(k0, k1 + 1))
    return best <= tol * max(1.0, abs(w))


def x_member(z, a, c, base_arc, R, depth):
    """True / False for membership in X_depth, recomputed with mpmath; None
    when the orbit outruns what the comparison can decide."""
    logs = threshold_logs(R, abs(a), depth)
    with mpmath.workdps(60):
        w = mpmath.mpc(z.real, z.imag)
        A = mpmath.mpc(a.real, a.imag)
        for k in range(depth + 1):
            logw = mpmath.log(abs(w))
            if logw < logs[k]:
                return False
            if k == depth:
                return True
            if w.real <= -c or (abs(w) < 1e300 and in_trap(complex(w), c, base_arc)):
                return True
            if w.real > 1e5:
                # only |f(w)| is meaningful now: log|f(w)| ~ Re w
                if k + 1 == depth:
                    return w.real + mpmath.log1p(-abs(a) * mpmath.exp(-w.real)) >= logs[k + 1]
                return None
            w = mpmath.exp(w) + A
    return True


def flood_components(bits):
    """BFS over 4-neighbours of False pixels: label array (0 on mask) and the
    set of labels touching the frame."""
    h, w = bits.shape
    lab = np.zeros((h, w), dtype=int)
    frame = set()
    n = 0
    for r in range(h):
        for c in range(w):
            if bits[r, c] or lab[r, c]:
                continue
            n += 1
            lab[r, c] = n
            queue = deque([(r, c)])
            while queue:
                i, j = queue.popleft()
                if i in (0, h - 1) or j in (0, w - 1):
                    frame.add(n)
                for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    u, v = i + di, j + dj
                    if 0 <= u < h and 0 <= v < w and not bits[u, v] and not lab[u, v]:
                        lab[u, v] = n
                        queue.append((u, v))
    return lab, frame


def same_partition(lab_a, lab_b):
    """Do two label arrays (0 = background) induce the same partition?"""
    a, b = lab_a.ravel(), lab_b.ravel()
    if not np.array_equal(a == 0, b == 0):
        return False
    pairs = set(zip(a[a > 0].tolist(), b[b > 0].tolist()))
    return len(pairs) == len({p for p, _ in pairs}) == len({q for _, q in pairs})

"""Invariant suites behind ``expoweb check``; each returns a JSON-ready dict
with a status of pass, fail or precondition-violation."""
from __future__ import annotations

import math

import numpy as np

from .fatou import conjugacy_residual, semiconjugacy_residual
from .growth import Parameter, max_modulus_iter, sandwich_slack, verify_R_zero
from .raster import GridSpec, Mask, complement_components

SANDWICH_TOL = 1e-12
RESIDUAL_TOL = 1e-10


def growth_suite(K: float = 1.0, size: int = 100_000, seed: int = 0) -> dict:
    """Random (z, K, a) above the growth threshold; K is drawn from [K, K + 10]."""
    if K < 1.0:
        return {"status": "precondition-violation",
                "violations": [{"K": K, "reason": "K must be >= 1"}]}
    rng = np.random.default_rng(seed)
    a = rng.uniform(-10, 10, size) + 1j * rng.uniform(-10, 10, size)
    Ks = rng.uniform(K, K + 10.0, size)
    x0 = np.log1p(2.0 * (np.abs(a) + Ks))
    x = x0 + rng.exponential(20.0, size)
    x[: size // 10] = x0[: size // 10]  # points on the threshold itself
    z = x + 1j * rng.uniform(-50, 50, size)
    low, high = sandwich_slack(z, Ks, a)
    worst = float(min(low.min(), high.min()))
    return {"status": "pass" if worst >= -SANDWICH_TOL else "fail", "samples": size,
            "min_log_slack": worst, "tolerance": SANDWICH_TOL}


def sandwich_suite(K: float = 1.0, params=(-2.0, -1.5, complex(2.061, 1.569)),
                   radii=(3.0,), max_n: int = 6) -> dict:
    if K < 1.0:
        return {"status": "precondition-violation",
                "violations": [{"K": K, "reason": "K must be >= 1"}]}
    rows = []
    ok = True
    for a in params:
        p = Parameter(a)
        for R in radii:
            if R < p.radius_threshold(K):
                rows.append({"a": [p.a.real, p.a.imag], "R": R, "status": "precondition-violation"})
                ok = False
                continue
            for n in range(max_n + 1):
                b = max_modulus_iter(R, p, n, K)
                holds = b.sandwich_lower <= b.direct_lower and b.direct_upper <= b.sandwich_upper
                ok &= holds
                rows.append({"a": [p.a.real, p.a.imag], "R": R, "n": n, "holds": holds,
                             "lower_level": b.direct_lower.level,
                             "log10_M": b.direct_lower.log10_estimate()})
    return {"status": "pass" if ok else "fail", "rows": rows}


def rzero_suite(K: float = 1.0, size: int | None = None, seed: int = 0) -> dict:
    n = size or 20
    re = np.linspace(-10, 10, n)
    im = np.linspace(-10, 10, n)
    radii = [10.0 ** e for e in range(-3, 3)]
    failures = []
    worst = math.inf
    for x in re:
        for y in im:
            p = Parameter(complex(x, y))
            for row in verify_R_zero(p, radii):
                rel = row["margin"] / row["R"]
                worst = min(worst, rel)
                if not (row["holds"] and row["consistent"]):
                    failures.append({"a": [x, y], "R": row["R"], "margin": row["margin"]})
    return {"status": "pass" if not failures else "fail", "grid": n, "decades": len(radii),
            "min_relative_margin": worst, "failures": failures[:20]}


def semiconjugacy_suite(K: float = 1.0, size: int | None = None, seed: int = 0) -> dict:
    n = size or 10_000
    rng = np.random.default_rng(seed)
    z = rng.uniform(-10, 10, n) + 1j * rng.uniform(-10, 10, n)
    zeta = rng.uniform(-20, 20, n) + 1j * rng.uniform(-20, 20, n)
    semi = float(np.max(semiconjugacy_residual(z)))
    conj = float(np.max(conjugacy_residual(zeta)))
    ok = semi <= RESIDUAL_TOL and conj <= RESIDUAL_TOL
    return {"status": "pass" if ok else "fail", "samples": n,
            "max_semiconjugacy_residual": semi, "max_conjugacy_residual": conj,
            "tolerance": RESIDUAL_TOL}


def brute_force_components(bits: np.ndarray):
    """Union-find labeling of False pixels (4-neighbours) and frame contact."""
    h, w = bits.shape
    parent = list(range(h * w))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for r in range(h):
        for c in range(w):
            if bits[r, c]:
                continue
            for dr, dc in ((0, 1), (1, 0)):
                rr, cc = r + dr, c + dc
                if rr < h and cc < w and not bits[rr, cc]:
                    ra, rb = find(r * w + c), find(rr * w + cc)
                    if ra != rb:
                        parent[ra] = rb
    roots = {}
    frame = set()
    for r in range(h):
        for c in range(w):
            if not bits[r, c]:
                root = find(r * w + c)
                roots[(r, c)] = root
                if r in (0, h - 1) or c in (0, w - 1):
                    frame.add(root)
    return roots, frame


def labels_agree(bits: np.ndarray) -> bool:
    """Does complement_components match the union-find oracle on this mask?"""
    h, w = bits.shape
    comps = complement_components(Mask(GridSpec((0, w), (0, h), w, h), bits))
    roots, frame = brute_force_components(bits)
    seen = {}
    for (r, c), root in roots.items():
        k = int(comps.labels[r, c])
        if k == 0 or seen.setdefault(root, k) != k:
            return False
        if comps.is_bounded(k) == (root in frame):
            return False
    # distinct oracle components carry distinct labels, and mask pixels carry none
    return len(set(seen.values())) == len(seen) and not np.any(comps.labels[bits])


def raster_suite(K: float = 1.0, size: int | None = None, seed: int = 0) -> dict:
    n = size or 500
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(n):
        h, w = rng.integers(8, 17, size=2)
        bits = rng.random((h, w)) < rng.uniform(0.2, 0.8)
        mismatches += not labels_agree(bits)
    return {"status": "pass" if mismatches == 0 else "fail", "masks": n,
            "mismatches": mismatches}


def run_suite(name: str, K: float = 1.0, seed: int = 0, size: int | None = None) -> dict:
    if name == "growth":
        return growth_suite(K, size or 100_000, seed)
    if name == "sandwich":
        return sandwich_suite(K)
    if name == "rzero":
        return rzero_suite(K, size, seed)
    if name == "semiconjugacy":
        return semiconjugacy_suite(K, size, seed)
    if name == "raster":
        return raster_suite(K, size, seed)
    raise ValueError(f"unknown suite {name!r}")

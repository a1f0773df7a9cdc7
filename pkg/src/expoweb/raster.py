"""Raster masks and the topology of their complements.

Conventions: bits[row, col] with row 0 at the top (largest imaginary part);
the mask is read 8-connected and its complement 4-connected.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .orbits import Label, thread_count

FOUR = ndimage.generate_binary_structure(2, 1)
EIGHT = ndimage.generate_binary_structure(2, 2)


@dataclass(frozen=True)
class GridSpec:
    re_range: tuple
    im_range: tuple
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ValueError("grids need at least 8 pixels per side")
        (r0, r1), (i0, i1) = self.re_range, self.im_range
        if not (r1 > r0 and i1 > i0):
            raise ValueError("grid ranges must be nonempty")
        object.__setattr__(self, "re_range", (float(r0), float(r1)))
        object.__setattr__(self, "im_range", (float(i0), float(i1)))

    @property
    def dx(self) -> float:
        return (self.re_range[1] - self.re_range[0]) / self.nx

    @property
    def dy(self) -> float:
        return (self.im_range[1] - self.im_range[0]) / self.ny

    def centers(self) -> np.ndarray:
        x = self.re_range[0] + (np.arange(self.nx) + 0.5) * self.dx
        y = self.im_range[1] - (np.arange(self.ny) + 0.5) * self.dy
        return x[None, :] + 1j * y[:, None]

    def pixel_of(self, z: complex) -> tuple[int, int]:
        col = math.floor((z.real - self.re_range[0]) / self.dx)
        row = math.floor((self.im_range[1] - z.imag) / self.dy)
        if not (0 <= col < self.nx and 0 <= row < self.ny):
            raise ValueError(f"{z} lies outside the grid")
        return row, col

    def center_of(self, row: int, col: int) -> complex:
        return complex(self.re_range[0] + (col + 0.5) * self.dx,
                       self.im_range[1] - (row + 0.5) * self.dy)

    @staticmethod
    def square(center: complex, half_width: float, n: int) -> "GridSpec":
        c = complex(center)
        return GridSpec((c.real - half_width, c.real + half_width),
                        (c.imag - half_width, c.imag + half_width), n, n)


@dataclass(frozen=True)
class Mask:
    grid: GridSpec
    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=bool)
        if b.shape != (self.grid.ny, self.grid.nx):
            raise ValueError(f"mask shape {b.shape} does not match grid {self.grid.ny}x{self.grid.nx}")
        b = b.copy()
        b.flags.writeable = False
        object.__setattr__(self, "bits", b)

    def with_pixels(self, points, value: bool) -> "Mask":
        b = self.bits.copy()
        for z in points:
            b[self.grid.pixel_of(complex(z))] = value
        return Mask(self.grid, b)

    def to_pgm(self) -> bytes:
        """Binary PGM (P5): mask pixels white."""
        img = np.where(self.bits, 255, 0).astype(np.uint8)
        head = f"P5\n{self.grid.nx} {self.grid.ny}\n255\n".encode("ascii")
        return head + img.tobytes()


def subsample_offsets(grid: GridSpec, supersample: int) -> list[complex]:
    """Offsets of an s x s lattice of sample points inside one pixel (s odd
    includes the center)."""
    if supersample < 1:
        raise ValueError("supersample must be >= 1")
    f = (np.arange(supersample) + 0.5) / supersample - 0.5
    return [complex(ox * grid.dx, oy * grid.dy) for oy in f for ox in f]


def rasterize(predicate, grid: GridSpec, threads: int | None = None, tile_rows: int = 64,
              supersample: int = 1) -> Mask:
    """Evaluate a vectorized predicate (complex array -> bool array) at pixel
    centers.  With supersample = s > 1 a pixel is set when the predicate holds
    at any point of an s x s lattice inside it."""
    z = grid.centers()
    offsets = subsample_offsets(grid, supersample)
    tiles = [(r0, min(grid.ny, r0 + tile_rows)) for r0 in range(0, grid.ny, tile_rows)]

    def work(t):
        zt = z[t[0]:t[1]]
        acc = np.zeros(zt.shape, dtype=bool)
        for off in offsets:
            acc |= np.broadcast_to(np.asarray(predicate(zt + off), dtype=bool), zt.shape)
        return acc

    n = thread_count(threads)
    if n == 1 or len(tiles) == 1:
        parts = [work(t) for t in tiles]
    else:
        with ThreadPoolExecutor(max_workers=n) as ex:
            parts = list(ex.map(work, tiles))
    return Mask(grid, np.concatenate(parts, axis=0))


def labels_mask(labels: np.ndarray, grid: GridSpec,
                members=(Label.A_R_VERIFIED, Label.BASIN)) -> Mask:
    """Mask from a label array produced by classify_grid."""
    codes = [m.value for m in members]
    return Mask(grid, np.isin(labels, codes))


def classification_mask(p, grid: GridSpec, cfg, depth: int, cycle, supersample: int = 1,
                        members=(Label.A_R_VERIFIED, Label.BASIN), max_iter: int = 500,
                        threads: int | None = None) -> Mask:
    """Mask of pixels whose samples classify into ``members``."""
    from .orbits import Thresholds, classify_grid
    thr = Thresholds.make(cfg.R, p, depth, cfg.K)
    codes = [m.value for m in members]
    z = grid.centers()
    acc = np.zeros(z.shape, dtype=bool)
    for off in subsample_offsets(grid, supersample):
        lab = classify_grid(z + off, p, cfg, depth, cycle, max_iter=max_iter, threads=threads,
                            thresholds=thr)["label"]
        acc |= np.isin(lab, codes)
    return Mask(grid, acc)


# --------------------------------------------------------- components

@dataclass(frozen=True)
class ComponentLabels:
    labels: np.ndarray  # 0 on the mask, 1..n on complement components
    count: int
    bounded: np.ndarray  # bounded[k] for label k (index 0 unused)

    def is_bounded(self, label: int) -> bool:
        return bool(self.bounded[label])

    def report(self) -> list[dict]:
        out = []
        sizes = np.bincount(self.labels.ravel(), minlength=self.count + 1)
        boxes = ndimage.find_objects(self.labels)
        for k in range(1, self.count + 1):
            sl = boxes[k - 1]
            out.append({
                "label": k,
                "size": int(sizes[k]),
                "bounded": bool(self.bounded[k]),
                "bbox": [sl[0].start, sl[1].start, sl[0].stop - 1, sl[1].stop - 1],
            })
        return out


def _frame_labels(labels: np.ndarray) -> np.ndarray:
    edge = np.concatenate((labels[0], labels[-1], labels[:, 0], labels[:, -1]))
    return np.unique(edge[edge > 0])


def complement_components(m: Mask) -> ComponentLabels:
    lab, n = ndimage.label(~m.bits, structure=FOUR)
    bounded = np.ones(n + 1, dtype=bool)
    bounded[0] = False
    bounded[_frame_labels(lab)] = False
    return ComponentLabels(lab, n, bounded)


def _interior_pixel(m: Mask, z: complex) -> tuple[int, int]:
    r, c = m.grid.pixel_of(complex(z))
    return r, c


def separates_point(m: Mask, z: complex, comps: ComponentLabels | None = None) -> bool:
    """Does the mask enclose z?  A pixel on the mask is temporarily cleared first."""
    r, c = _interior_pixel(m, z)
    if not m.bits[r, c]:
        comps = comps or complement_components(m)
        return comps.is_bounded(int(comps.labels[r, c]))
    b = m.bits.copy()
    b[r, c] = False
    comps = complement_components(Mask(m.grid, b))
    return comps.is_bounded(int(comps.labels[r, c]))


def mask_connected(m: Mask) -> bool:
    _, n = ndimage.label(m.bits, structure=EIGHT)
    return n == 1


def default_samples(grid: GridSpec, per_side: int = 8, inset: float = 0.25) -> list[complex]:
    """Sub-lattice of pixel centers inside the central (1 - 2*inset) part of the grid."""
    out = []
    for i in range(per_side):
        for j in range(per_side):
            fx = inset + (1 - 2 * inset) * (i + 0.5) / per_side
            fy = inset + (1 - 2 * inset) * (j + 0.5) / per_side
            col = min(grid.nx - 1, int(fx * grid.nx))
            row = min(grid.ny - 1, int(fy * grid.ny))
            out.append(grid.center_of(row, col))
    return out


# --------------------------------------------------------- nested domains

def enclosed_region(m: Mask, center: complex, radius: float) -> np.ndarray:
    """Fill of the mask pixels within ``radius`` of center: those pixels plus
    everything they cut off from the frame (4-connected paths through the
    remaining pixels).  The fill is bounded and its edge lies in the mask."""
    z = m.grid.centers()
    walls = m.bits & (np.abs(z - center) <= radius)
    lab, _ = ndimage.label(~walls, structure=FOUR)
    return ~np.isin(lab, _frame_labels(lab))


@dataclass(frozen=True)
class NestedDomain:
    radius: float
    size: int
    inner_radius: float  # largest disc about the center contained in the domain
    bbox: tuple

    def as_dict(self):
        return {"radius": self.radius, "size": self.size, "inner_radius": self.inner_radius,
                "bbox": list(self.bbox)}


def nested_chain(m: Mask, center: complex, radii) -> list[NestedDomain]:
    """G_n for increasing radii: the component of the fill containing center,
    kept only when it strictly contains the previous one."""
    z = m.grid.centers()
    dist = np.abs(z - center)
    r0, c0 = m.grid.pixel_of(center)
    chain: list[NestedDomain] = []
    prev = None
    for rad in sorted(radii):
        region = enclosed_region(m, center, rad)
        lab, _ = ndimage.label(region, structure=EIGHT)
        k = lab[r0, c0]
        if k == 0:
            continue
        dom = lab == k
        if prev is not None and not (np.all(dom[prev]) and dom.sum() > prev.sum()):
            continue
        outside = ~dom
        inner = float(dist[outside].min()) if outside.any() else math.inf
        rows, cols = np.nonzero(dom)
        chain.append(NestedDomain(float(rad), int(dom.sum()), inner,
                                  (int(rows.min()), int(cols.min()), int(rows.max()), int(cols.max()))))
        prev = dom
    return chain


@dataclass
class SpiderReport:
    verdict: bool
    connected: bool
    samples: list
    failing: list
    chain: list
    components: list

    def as_dict(self):
        return {
            "verdict": self.verdict,
            "connected": self.connected,
            "samples": [{"z": [s.real, s.imag], "separated": ok} for s, ok in self.samples],
            "failing": [[s.real, s.imag] for s in self.failing],
            "chain": [g.as_dict() for g in self.chain],
            "components": self.components,
        }


def spiders_web_verdict(m: Mask, sample_points=None, center: complex | None = None,
                        n_radii: int = 12) -> SpiderReport:
    """Mask connected (8-neighbours) and every sample enclosed, plus a G_n chain."""
    grid = m.grid
    if sample_points is None:
        sample_points = default_samples(grid)
    if center is None:
        center = complex(0.5 * sum(grid.re_range), 0.5 * sum(grid.im_range))
    comps = complement_components(m)
    results = [(complex(s), separates_point(m, s, comps)) for s in sample_points]
    failing = [s for s, ok in results if not ok]
    connected = mask_connected(m)
    half = 0.5 * min(grid.re_range[1] - grid.re_range[0], grid.im_range[1] - grid.im_range[0])
    step = max(grid.dx, grid.dy)
    radii = np.geomspace(4 * step, half, n_radii)
    chain = nested_chain(m, center, radii)
    return SpiderReport(verdict=connected and not failing, connected=connected,
                        samples=results, failing=failing, chain=chain,
                        components=comps.report())


@dataclass(frozen=True)
class SeparationWitness:
    p_label: int
    q_label: int
    p_size: int
    q_size: int

    def as_dict(self):
        return {"p_component": self.p_label, "q_component": self.q_label,
                "p_size": self.p_size, "q_size": self.q_size}


class SeparationFailure(RuntimeError):
    pass


def pairwise_separation_witness(m: Mask, p: complex, q: complex,
                                clear_pixels: bool = False) -> SeparationWitness:
    """Distinct bounded complement components for p and q.

    Points whose pixel lies on the mask are rejected unless ``clear_pixels``,
    which removes those two pixels first (as separates_point does)."""
    p, q = complex(p), complex(q)
    if p == q:
        raise ValueError("p and q must differ")
    rp, rq = m.grid.pixel_of(p), m.grid.pixel_of(q)
    if m.bits[rp] or m.bits[rq]:
        if not clear_pixels:
            raise ValueError("separation witness needs points off the mask")
        m = m.with_pixels([p, q], False)
    comps = complement_components(m)
    lp, lq = int(comps.labels[rp]), int(comps.labels[rq])
    if lp == lq:
        raise SeparationFailure("p and q share a complement component")
    for lab, name in ((lp, "p"), (lq, "q")):
        if not comps.is_bounded(lab):
            raise SeparationFailure(f"{name} lies in an unbounded component at this resolution")
    sizes = np.bincount(comps.labels.ravel(), minlength=comps.count + 1)
    return SeparationWitness(lp, lq, int(sizes[lp]), int(sizes[lq]))

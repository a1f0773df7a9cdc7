"""Images of the classification, with optional hair and certificate overlays."""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .growth import GrowthConstants, Parameter
from .orbits import Cycle, Label, classify_grid
from .raster import GridSpec

# one hue per cycle point, darkened with the number of iterations needed
BASIN_COLORS = np.array([
    (62, 105, 168), (72, 150, 96), (196, 150, 58), (150, 86, 160),
    (70, 160, 170), (176, 84, 74), (120, 120, 190), (160, 160, 70),
], dtype=float)
CLASS_COLORS = {
    Label.A_R_VERIFIED.value: (92, 92, 92),
    Label.ESCAPING_NUMERICAL.value: (168, 168, 168),
    Label.MEANDERING_CANDIDATE.value: (214, 48, 48),
    Label.UNDECIDED.value: (0, 0, 0),
}
OVERLAY_COLORS = {
    "hair": (255, 210, 0),
    "rectangle": (255, 255, 255),
    "trap": (255, 120, 0),
    "curve": (0, 230, 120),
    "disc": (230, 230, 230),
}


def colorize(classes: dict) -> np.ndarray:
    """RGB uint8 image from a classify_grid result."""
    lab = classes["label"]
    img = np.zeros(lab.shape + (3,), dtype=np.uint8)
    basin = lab == Label.BASIN.value
    if basin.any():
        idx = np.maximum(classes["nearest"], 0) % len(BASIN_COLORS)
        shade = 0.45 + 0.55 * np.exp(-classes["stop"].astype(float) / 24.0)
        rgb = BASIN_COLORS[idx] * shade[..., None]
        img[basin] = np.clip(np.rint(rgb[basin]), 0, 255).astype(np.uint8)
    for code, color in CLASS_COLORS.items():
        img[lab == code] = color
    return img


def render_classes(p: Parameter, grid: GridSpec, cfg: GrowthConstants, depth: int,
                   cycle: Cycle | None, max_iter: int = 500, threads: int | None = None) -> np.ndarray:
    classes = classify_grid(grid.centers(), p, cfg, depth, cycle, max_iter=max_iter,
                            threads=threads)
    return colorize(classes)


def _to_pixels(grid: GridSpec, pts) -> list[tuple[float, float]]:
    pts = np.asarray(pts, dtype=np.complex128)
    x = (pts.real - grid.re_range[0]) / grid.dx - 0.5
    y = (grid.im_range[1] - pts.imag) / grid.dy - 0.5
    keep = np.isfinite(x) & np.isfinite(y)
    # clip far-away vertices so the line direction survives
    lim = 4.0 * max(grid.nx, grid.ny)
    x = np.clip(x[keep], -lim, lim)
    y = np.clip(y[keep], -lim, lim)
    return list(zip(x.tolist(), y.tolist()))


def draw_overlays(img: np.ndarray, grid: GridSpec, polylines=(), points=(), circles=()) -> np.ndarray:
    """polylines: (kind, complex array); points: (kind, z); circles: (kind, center, radius)."""
    pic = Image.fromarray(img, mode="RGB")
    draw = ImageDraw.Draw(pic)
    for kind, pts in polylines:
        xy = _to_pixels(grid, pts)
        if len(xy) >= 2:
            draw.line(xy, fill=OVERLAY_COLORS.get(kind, (255, 255, 255)), width=1)
    for kind, center, radius in circles:
        n = 256
        t = np.linspace(0.0, 2.0 * math.pi, n + 1)
        xy = _to_pixels(grid, complex(center) + radius * np.exp(1j * t))
        draw.line(xy, fill=OVERLAY_COLORS.get(kind, (255, 255, 255)), width=1)
    for kind, z in points:
        (x, y), = _to_pixels(grid, [complex(z)])
        draw.ellipse((x - 2, y - 2, x + 2, y + 2), outline=OVERLAY_COLORS.get(kind, (255, 255, 255)))
    return np.asarray(pic, dtype=np.uint8).copy()


def ppm_bytes(img: np.ndarray) -> bytes:
    h, w, _ = img.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(img, dtype=np.uint8).tobytes()


def read_ppm(data: bytes) -> np.ndarray:
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)


def write_image(path, img: np.ndarray) -> list[str]:
    """Write .ppm or .png by suffix; any other suffix gets both."""
    path = Path(path)
    written = []
    suffix = path.suffix.lower()
    if suffix in (".ppm", ".png"):
        targets = [path]
    else:
        targets = [path.with_suffix(".ppm"), path.with_suffix(".png")]
    for t in targets:
        if t.suffix.lower() == ".ppm":
            t.write_bytes(ppm_bytes(img))
        else:
            Image.fromarray(img, mode="RGB").save(t, format="PNG")
        written.append(str(t))
    return written

"""expoweb command line: render | certify | hairs | fatou | check.

Exit codes: 0 success, 1 verification failure, 2 invalid configuration, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .jsonio import dumps

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------- parsing

def parse_complex(text) -> complex:
    if isinstance(text, (int, float)):
        return complex(text)
    if isinstance(text, (list, tuple)):
        if len(text) != 2:
            raise ConfigError(f"expected [re, im], got {text!r}")
        return complex(float(text[0]), float(text[1]))
    s = str(text).strip()
    try:
        if "," in s:
            re_, im_ = s.split(",", 1)
            return complex(float(re_), float(im_))
        return complex(s.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise ConfigError(f"cannot read complex number {text!r}") from exc


def parse_grid(text) -> tuple[int, int]:
    if isinstance(text, (list, tuple)):
        w, h = text
    else:
        s = str(text).lower()
        w, h = (s.split("x", 1) if "x" in s else (s, s))
    try:
        w, h = int(w), int(h)
    except ValueError as exc:
        raise ConfigError(f"grid must look like WxH, got {text!r}") from exc
    if w < 8 or h < 8:
        raise ConfigError("grid needs at least 8 pixels per side")
    return w, h


def parse_window(text) -> tuple[float, float, float, float]:
    vals = text if isinstance(text, (list, tuple)) else str(text).split(",")
    try:
        x0, x1, y0, y1 = (float(v) for v in vals)
    except ValueError as exc:
        raise ConfigError(f"window must be xmin,xmax,ymin,ymax, got {text!r}") from exc
    if not (x1 > x0 and y1 > y0):
        raise ConfigError("window ranges must be nonempty")
    return x0, x1, y0, y1


def _apply_config(args: argparse.Namespace) -> argparse.Namespace:
    """Values from --config (a JSON object) override the flags."""
    if not args.config:
        return args
    try:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except OSError:
        raise
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    for key, value in data.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise ConfigError(f"unknown config key {key!r}")
        setattr(args, dest, value)
    return args


def _threads(args):
    if args.threads is not None:
        if int(args.threads) < 1:
            raise ConfigError("--threads must be >= 1")
        os.environ["EXPOWEB_THREADS"] = str(int(args.threads))
    return args.threads


def _setup(args):
    from .growth import Parameter
    a = parse_complex(args.a)
    try:
        p = Parameter(a)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if args.depth is not None and int(args.depth) < 1:
        raise ConfigError("--depth must be >= 1")
    return p


def _emit(obj, out):
    text = dumps(obj)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------- commands

def _default_R(p, R):
    if R is not None:
        R = float(R)
        need = p.radius_threshold(1.0)
        if R < need:
            raise ConfigError(f"R must be at least {need:.6g} for a={p.a}")
        return R
    return p.radius_threshold(1.0)


def cmd_render(args) -> int:
    from .growth import GrowthConstants
    from .hairs import ExternalAddress, trace_hair
    from .orbits import find_cycle
    from .raster import GridSpec
    from .render import draw_overlays, render_classes, write_image

    p = _setup(args)
    nx, ny = parse_grid(args.grid or "512x512")
    x0, x1, y0, y1 = parse_window(args.window)
    depth = int(args.depth or 3)
    R = _default_R(p, args.R)
    cfg = GrowthConstants.make(p, R)
    cycle = find_cycle(p)
    grid = GridSpec((x0, x1), (y0, y1), nx, ny)
    img = render_classes(p, grid, cfg, depth, cycle if cycle.kind != "none" else None,
                         max_iter=int(args.max_iter), threads=_threads(args))
    polylines = []
    for text in args.hair or []:
        try:
            addr = ExternalAddress.parse(text)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        try:
            h = trace_hair(addr, p, int(args.hair_depth), t_max=max(x1, 10.0))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        polylines.append(("hair", h.points))
    if polylines:
        img = draw_overlays(img, grid, polylines=polylines)
    written = write_image(args.out or "render.ppm", img)
    sys.stderr.write("wrote " + ", ".join(written) + "\n")
    return EXIT_OK


def cmd_certify(args) -> int:
    from .orbits import find_cycle
    from .raster import GridSpec
    from .render import draw_overlays, render_classes, write_image
    from .growth import GrowthConstants
    from .trap import CertificateError, build_construction, separation_certificate

    p = _setup(args)
    eps = float(args.eps)
    if not 0 < eps < 1:
        raise ConfigError("--eps must lie in (0, 1)")
    depth = int(args.depth or 3)
    if depth < 2:
        raise ConfigError("certificates need --depth >= 2")
    z0 = parse_complex(args.z0)
    cycle = find_cycle(p)
    if cycle.kind != "attracting":
        raise ConfigError(f"a={p.a} has no attracting cycle (found {cycle.kind})")
    try:
        con = build_construction(z0, p, eps, cycle)
    except (ValueError, RuntimeError) as exc:
        raise ConfigError(f"trap construction failed: {exc}") from exc
    status = EXIT_OK
    try:
        cert = separation_certificate(z0, p, eps, depth, int(args.samples), cycle=cycle,
                                      threads=_threads(args), strict=False, construction=con)
    except CertificateError as exc:
        sys.stderr.write(f"certificate failed: {exc}\n")
        return EXIT_FAIL
    report = cert.as_dict()
    report["verified"] = cert.verified
    if not cert.verified:
        status = EXIT_FAIL
    _emit(report, args.out)
    if args.image:
        rect = con.rectangle
        pad = 1.0
        width = rect.re_max - rect.re_min + 2 * pad
        height = 2 * (rect.im_abs_max + pad)
        nx = parse_grid(args.grid or "512x512")[0]
        ny = max(8, int(round(nx * height / width)))  # square pixels
        grid = GridSpec((rect.re_min - pad, rect.re_max + pad),
                        (-rect.im_abs_max - pad, rect.im_abs_max + pad), nx, ny)
        img = render_classes(p, grid, GrowthConstants.make(p, con.R), depth, cycle)
        box = np.array([complex(rect.re_min, -rect.im_abs_max), complex(rect.re_max, -rect.im_abs_max),
                        complex(rect.re_max, rect.im_abs_max), complex(rect.re_min, rect.im_abs_max),
                        complex(rect.re_min, -rect.im_abs_max)])
        trap = con.trap
        lines = [("rectangle", box),
                 ("trap", np.array([complex(-trap.c, -rect.im_abs_max - pad), complex(-trap.c, rect.im_abs_max + pad)]))]
        kmax = int(math.ceil((rect.im_abs_max + pad) / (2 * math.pi))) + 1
        base = trap.base_arc[np.abs(trap.base_arc.real) < 4 * rect.re_max]
        for k in range(-kmax, kmax + 1):
            lines.append(("trap", base + 2j * math.pi * k))
        lines.append(("curve", np.array(cert.boundary_samples + cert.boundary_samples[:1])))
        img = draw_overlays(img, grid, polylines=lines, points=[("curve", z0)],
                            circles=[("disc", 0.0, con.R)])
        write_image(args.image, img)
    return status


def cmd_hairs(args) -> int:
    from .hairs import BranchCutError, ExternalAddress, HairNotConverged, trace_hair

    p = _setup(args)
    addresses = args.address or ["[0]"]
    out = []
    status = EXIT_OK
    for text in addresses:
        try:
            addr = ExternalAddress.parse(text)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        try:
            h = trace_hair(addr, p, int(args.pullback_depth), float(args.t_max),
                           gap_tol=float(args.gap_tol) if args.gap_tol is not None else None)
        except (HairNotConverged, BranchCutError) as exc:
            out.append({"address": addr.as_dict(), "error": str(exc)})
            status = EXIT_FAIL
            continue
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        out.append(h.as_dict())
    _emit({"parameter": [p.a.real, p.a.imag], "hairs": out}, args.out)
    return status


def cmd_fatou(args) -> int:
    from .fatou import FatouOrbitConfig, fatou_A_membership

    try:
        cfg = FatouOrbitConfig(T=float(args.T), n0_max=int(args.n0_max), depth=int(args.depth or 4))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    points = args.z or ["100", "-100", "0,3.141592653589793"]
    rows = []
    for text in points:
        z = parse_complex(text)
        v = fatou_A_membership(z, cfg)
        rows.append({"z": [z.real, z.imag], "verdict": "verified" if v.verified else "not-verified",
                     "n0": v.n0, "depth": v.depth})
    _emit({"T": cfg.T, "n0_max": cfg.n0_max, "depth": cfg.depth, "points": rows}, args.out)
    return EXIT_OK


SUITES = ("growth", "sandwich", "rzero", "semiconjugacy", "raster")


def cmd_check(args) -> int:
    from .checks import run_suite

    if args.suites is None:
        names = list(SUITES)
    else:
        names = [s for s in str(args.suites).split(",") if s.strip()]
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise ConfigError(f"unknown suites {unknown}; choose from {','.join(SUITES)}")
    seed = int(args.seed)
    report = {"suites": {}}
    for name in names:
        report["suites"][name] = run_suite(name, K=float(args.K), seed=seed, size=args.size)
    statuses = [r["status"] for r in report["suites"].values()]
    report["passed"] = all(s == "pass" for s in statuses)
    _emit(report, args.out)
    if "precondition-violation" in statuses:
        return EXIT_CONFIG
    return EXIT_OK if report["passed"] else EXIT_FAIL


# ------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--a", default="-2", help="parameter a as re,im or a real number (use --a=-2,0 for a leading minus)")
    common.add_argument("--eps", default=0.1, type=float, help="radius of the disc about a")
    common.add_argument("--depth", default=None, type=int, help="number of growth thresholds checked")
    common.add_argument("--grid", default=None, help="pixel size WxH")
    common.add_argument("--out", default=None, help="output path (stdout for JSON when omitted)")
    common.add_argument("--config", default=None, help="JSON file whose keys override the flags")
    common.add_argument("--threads", default=None, type=int, help="worker threads (default EXPOWEB_THREADS)")

    ap = argparse.ArgumentParser(prog="expoweb", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"expoweb {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("render", parents=[common], help="classification image (PPM/PNG)")
    r.add_argument("--window", default="-8,8,-8,8", help="xmin,xmax,ymin,ymax")
    r.add_argument("--R", default=None, type=float)
    r.add_argument("--max-iter", default=500, type=int)
    r.add_argument("--hair", action="append", help="overlay the hair with this address, e.g. 1,[0]")
    r.add_argument("--hair-depth", default=20, type=int)
    r.set_defaults(func=cmd_render)

    c = sub.add_parser("certify", parents=[common], help="separation certificate (JSON)")
    c.add_argument("--z0", default="0")
    c.add_argument("--samples", default=512, type=int, help="samples per side")
    c.add_argument("--image", default=None, help="overlay image path")
    c.set_defaults(func=cmd_certify)

    h = sub.add_parser("hairs", parents=[common], help="trace hairs (JSON polylines)")
    h.add_argument("--address", action="append", help="address such as [0] or 1,[0]")
    h.add_argument("--pullback-depth", default=20, type=int)
    h.add_argument("--t-max", default=50.0, type=float)
    h.add_argument("--gap-tol", default=None, type=float)
    h.set_defaults(func=cmd_hairs)

    f = sub.add_parser("fatou", parents=[common], help="A-membership for z + 1 + e^-z")
    f.add_argument("--z", action="append", help="point as re,im")
    f.add_argument("--T", default=1.0, type=float)
    f.add_argument("--n0-max", default=8, type=int)
    f.set_defaults(func=cmd_fatou)

    k = sub.add_parser("check", parents=[common], help="run invariant suites")
    k.add_argument("--suites", default=None, help=f"comma list from {','.join(SUITES)}; empty for none")
    k.add_argument("--K", default=1.0, type=float)
    k.add_argument("--seed", default=0, type=int)
    k.add_argument("--size", default=None, type=int, help="samples per suite")
    k.set_defaults(func=cmd_check)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        args = _apply_config(args)
        return int(args.func(args))
    except ConfigError as exc:
        sys.stderr.write(f"invalid configuration: {exc}\n")
        return EXIT_CONFIG
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

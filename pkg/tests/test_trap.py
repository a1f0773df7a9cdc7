import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import ndimage

import oracles
from expoweb.growth import Parameter, continued_growth_K
from expoweb.orbits import Thresholds, basin_test, find_cycle
from expoweb.trap import (AccessArc, CertificateError, PullbackError, SearchExhausted,
                          TrapSet, bounding_rectangle, build_access_arc, build_construction,
                          build_trap, choose_R, pull_back, resample, separation_certificate,
                          strip_delta, trap_from_julia, winding_number, x_membership)

TWO_PI = 2 * math.pi


@pytest.fixture(scope="module")
def con2():
    return build_construction(0j, Parameter(-2.0), 0.1)


@pytest.fixture(scope="module")
def con3(p3, cycle3):
    return build_construction(0j, p3, 0.05, cycle3)


def flat_trap(a, eps, im=0.0):
    """Hypothetical trap whose base arc is a horizontal ray (spread exactly 2 pi)."""
    c = -math.log(eps)
    base = np.array([complex(-c, im), complex(700.0, im)])
    return TrapSet(a=a, c=c, base_arc=base, tail_im=im, inf_im=im, sup_im=im, delta=TWO_PI)


def test_access_arc_for_a_minus_two(con2, p2, cycle2):
    v = con2.sigma.vertices
    assert abs(abs(v[0] - p2.a) - 0.1) <= 1e-9
    assert np.all(np.diff(v.real[con2.sigma.realpart_monotone_from:]) >= 0)
    assert v[-1].real >= 1e300
    assert basin_test(v[v.real < 60], p2, cycle2).all()


def test_access_arc_start_radius(p2, cycle2):
    s = build_access_arc(p2, cycle2, math.exp(-1.0))
    assert abs(abs(s.vertices[0] - p2.a) - math.exp(-1.0)) <= 1e-9
    assert -2 + math.exp(-1) == pytest.approx(-1.632, abs=1e-3)


def test_access_arc_period_three(con3, p3, cycle3):
    v = con3.sigma.vertices
    assert con3.sigma.source["pullbacks"] == 2
    assert abs(abs(v[0] - p3.a) - 0.05) <= 1e-9
    assert basin_test(v[v.real < 60], p3, cycle3).all()


def test_access_arc_preconditions(p2, cycle2):
    with pytest.raises(ValueError):
        build_access_arc(p2, find_cycle(Parameter(1.0)), 0.1)
    with pytest.raises(ValueError):
        build_access_arc(p2, cycle2, 1.5)

def test_access_arc_disc_must_lie_in_basin(p3, cycle3):
    # D(a, 0.3) for the period-3 parameter reaches the Julia set
    with pytest.raises(ValueError, match="basin"):
        build_access_arc(p3, cycle3, 0.3)


def test_base_arc_maps_onto_sigma(con2, p2):
    base = con2.trap.base_arc
    img = np.exp(base[base.real < 700]) + p2.a
    sigma = con2.sigma.vertices
    for w in img[::10]:
        assert oracles.segment_distance(w, sigma) <= 1e-9 * max(1.0, abs(w))


def test_trap_membership_examples(con2):
    trap = con2.trap
    assert trap.c == pytest.approx(math.log(10))
    assert trap.contains(complex(-trap.c - 1, 17))
    assert trap.contains(complex(-trap.c, 0))
    assert not trap.contains(0j)
    assert trap.contains(complex(trap.base_arc[3]))
    assert trap.contains(complex(trap.base_arc[3]) + 3j * TWO_PI)


@settings(max_examples=300)
@given(st.floats(-10, 30), st.floats(-40, 40))
def test_trap_is_periodic(x, y):
    trap = build_construction(0j, Parameter(-2.0), 0.1).trap
    z = complex(x, y)
    assert trap.contains(z) == trap.contains(z + TWO_PI * 1j)


def test_trap_periodicity_random_bulk(con2):
    trap = con2.trap
    rng = np.random.default_rng(7)
    pts = rng.uniform(-5, 15, 10_000) + 1j * rng.uniform(-30, 30, 10_000)
    # bias half of the points onto the arcs so both answers occur
    arc_pts = trap.base_arc[rng.integers(0, 200, 5000)] + 1j * TWO_PI * rng.integers(-4, 5, 5000)
    pts[:5000] = arc_pts
    same = [trap.contains(complex(z)) == trap.contains(complex(z) + TWO_PI * 1j) for z in pts]
    assert all(same)
    assert sum(trap.contains(complex(z)) for z in pts[:5000]) == 5000


def test_strip_spread(con2, con3):
    for con in (con2, con3):
        d = strip_delta(con.trap)
        assert d >= TWO_PI
        assert d == pytest.approx(TWO_PI + con.trap.base_arc.imag.max() - con.trap.base_arc.imag.min())
    assert strip_delta(flat_trap(-2, 0.1)) == pytest.approx(TWO_PI)
    wavy = flat_trap(-2, 0.1)
    wavy = TrapSet(wavy.a, wavy.c, np.array([-2.3 + 0.2j, 0 + 1.2j, 5 + 0.2j]), 0.2, 0.2, 1.2, 0)
    assert strip_delta(wavy) <= TWO_PI + 2


def test_choose_R_formula(p2):
    R = choose_R(0j, flat_trap(-2, 0.1), p2)
    assert R == pytest.approx(max(0, math.log(10), 3, math.log(1 + 2 * (2 + TWO_PI))) + 1)
    assert R == pytest.approx(4.0)
    assert math.log(1 + 2 * (2 + TWO_PI)) == pytest.approx(2.866, abs=1e-3)
    # c = 1 and |a| = 2: max(0, 1, 3, ln(1 + 2(2 + 2 pi))) + 1
    assert choose_R(0j, flat_trap(-2, math.exp(-1)), p2) == pytest.approx(4.0)


@given(st.floats(0, 50), st.floats(0, 50))
def test_choose_R_monotone(r1, r2):
    p = Parameter(-2.0)
    trap = flat_trap(-2, 0.1)
    lo, hi = sorted((r1, r2))
    assert choose_R(complex(lo, 0), trap, p) <= choose_R(complex(0, hi), trap, p)
    assert choose_R(complex(hi, 0), trap, p) > hi


def test_bounding_rectangle(p2):
    trap = flat_trap(-2, 0.1)
    rect = bounding_rectangle(0j, 4.0, trap, p2)
    assert rect.re_max == pytest.approx(max(7.0, continued_growth_K(5.0, p2)) + 1) == pytest.approx(8.0)
    assert rect.im_abs_max == pytest.approx(4 + TWO_PI + 1)
    assert rect.im_abs_max == pytest.approx(11.283, abs=1e-3)
    assert rect.re_min <= -trap.c - 1
    assert rect.re_min == pytest.approx(-5.0)
    wide = bounding_rectangle(0j, 4.0, trap, p2, margin=2.0)
    assert wide.re_min < rect.re_min and wide.re_max > rect.re_max and wide.im_abs_max > rect.im_abs_max
    assert rect.contains(0j)


def test_x_membership_examples(con2, p2):
    trap = con2.trap
    z = complex(-trap.c - 3, 2)
    ev = x_membership(z, trap, 3.0, p2, 3)
    assert ev.member and ev.first_trap_index == 0
    ev = x_membership(5 + 0j, trap, 4.0, p2, 3)
    # f(5) = e^5 - 2 is real and large, so it sits on the rightward tail of the trap
    assert ev.member and ev.first_trap_index == 1 and ev.threshold_indices == (0, 1)
    assert abs(cmath.exp(5) - 2) == pytest.approx(146.413, abs=1e-3)
    ev0 = x_membership(0j, trap, 4.0, p2, 3)
    assert not ev0.member and ev0.failed_at == 0
    # in the half-plane but inside D(0, R): the k = 0 term fails
    assert not x_membership(complex(-trap.c - 0.5, 0), trap, 4.0, p2, 3).member


@settings(max_examples=150, deadline=None)
@given(st.floats(-6, 10), st.floats(-14, 14), st.integers(1, 3))
def test_x_membership_monotone_in_depth(x, y, n):
    con = build_construction(0j, Parameter(-2.0), 0.1)
    z = complex(x, y)
    if x_membership(z, con.trap, con.R, con.p, n + 1).member:
        assert x_membership(z, con.trap, con.R, con.p, n).member


def test_failures_lie_in_the_threshold_discs(con2, p2):
    """A point failing at index n <= 2 has |f^n(z)| below M^n(R), i.e. lies in D_n."""
    rng = np.random.default_rng(3)
    rect = con2.rectangle
    thr = Thresholds.make(con2.R, p2, 3)
    for _ in range(2000):
        z = complex(rng.uniform(rect.re_min, rect.re_max), rng.uniform(-rect.im_abs_max, rect.im_abs_max))
        ev = x_membership(z, con2.trap, con2.R, p2, 3, thr)
        if not ev.member and ev.failed_at <= 2:
            w = z
            for _ in range(ev.failed_at):
                w = cmath.exp(w) + p2.a
            assert abs(w) < thr.brackets[ev.failed_at].upper.to_float()


def test_small_certificate(con2, p2):
    cert = separation_certificate(0j, p2, 0.1, depth=3, samples_per_side=64, construction=con2)
    assert cert.verified and cert.winding_number == 1
    assert cert.rectangle.contains(0j)
    assert cert.rectangle.re_min <= -cert.c < 0
    assert all(cert.rectangle.contains(z) for z in cert.boundary_samples)
    d = cert.as_dict()
    for key in ("parameter", "eps", "R", "depth", "rectangle", "samples", "spacing", "tool_version"):
        assert key in d
    assert set(d["samples"][0]) >= {"z", "verdict", "threshold_indices"}
    for s in cert.samples[::7]:
        assert oracles.x_member(s.z, p2.a, cert.c, con2.trap.base_arc, cert.R, 3)


def test_certificate_radius_exceeds_start_point(p2):
    z0 = 2.5 + 2.5j
    con = build_construction(z0, p2, 0.1)
    assert con.R > abs(z0)
    assert con.rectangle.contains(z0)


def test_certificate_depth_precondition(p2):
    with pytest.raises(ValueError):
        separation_certificate(0j, p2, 0.1, depth=1)
    with pytest.raises(ValueError):
        separation_certificate(0j, Parameter(1.0), 0.1, depth=3)


def test_raster_complement_component_inside_rectangle(con2, p2):
    """Flood fill of the complement of (X_3 pixels + certificate curve) from z0
    stays inside the bounding rectangle."""
    cert = separation_certificate(0j, p2, 0.1, depth=3, samples_per_side=256, construction=con2)
    rect = cert.rectangle
    pad = 2.0
    n = 160
    xs = np.linspace(rect.re_min - pad, rect.re_max + pad, n)
    ys = np.linspace(rect.im_abs_max + pad, -rect.im_abs_max - pad, n)
    thr = Thresholds.make(cert.R, p2, 3)
    bits = np.array([[x_membership(complex(x, y), con2.trap, cert.R, p2, 3, thr).member
                      for x in xs] for y in ys])
    dx, dy = xs[1] - xs[0], ys[0] - ys[1]
    # the curve is one pixel thick where its samples fall; densify first
    curve = cert.boundary_samples + cert.boundary_samples[:1]
    dense = resample(np.array(curve), 20 * len(curve))
    cols = np.rint((dense.real - xs[0]) / dx).astype(int)
    rows = np.rint((ys[0] - dense.imag) / dy).astype(int)
    bits[rows, cols] = True
    bits = ndimage.binary_dilation(bits, structure=ndimage.generate_binary_structure(2, 1),
                                   mask=np.zeros_like(bits)) | bits
    lab, _ = ndimage.label(~bits)
    r0, c0 = int(np.rint(ys[0] / dy)), int(np.rint(-xs[0] / dx))
    k = lab[r0, c0]
    assert k > 0
    rr, cc = np.nonzero(lab == k)
    assert xs[cc].min() >= rect.re_min and xs[cc].max() <= rect.re_max
    assert np.abs(ys[rr]).max() <= rect.im_abs_max


def test_pull_back_and_helpers():
    a = -2.0
    poly = np.array([1 + 0j, 1 + 2j, -3 + 2j, -3 - 2j])
    z = pull_back(poly, a)
    img = np.exp(z) + a
    assert abs(img[0] - poly[0]) <= 1e-12 and abs(img[-1] - poly[-1]) <= 1e-12
    assert max(oracles.segment_distance(w, poly) for w in img) <= 1e-12
    assert all(min(abs(img - v)) <= 1e-12 for v in poly)
    assert np.all(np.abs(np.diff(z)) <= math.pi / 2 + 1e-12)
    with pytest.raises(PullbackError):
        pull_back(np.array([a, 1 + 0j]), a)
    sq = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j])
    assert winding_number(sq, 0) == 1
    assert winding_number(sq[::-1], 0) == -1
    assert winding_number(sq, 5) == 0
    r = resample(np.array([0j, 10 + 0j]), 11)
    assert np.allclose(r, np.arange(11))


def test_trap_from_julia_search(p2):
    # at a = -2 the disc D(a, eps) lies in the basin: no point reaches Re <= -c
    f = cmath.exp(-2.05) - 2
    assert f.real == pytest.approx(-1.871, abs=1e-3) and f.real > math.log(0.1)
    with pytest.raises(SearchExhausted):
        trap_from_julia(p2, 0.1)


def test_trap_from_julia_first_hit():
    p = Parameter(complex(2.0, math.pi))
    eps = 0.1
    jt = trap_from_julia(p, eps)
    assert jt.n == 1
    assert (cmath.exp(jt.zeta) + p.a).real <= math.log(eps)
    assert abs(jt.zeta - p.a) < eps
    sing = [p.a]
    for _ in range(jt.n - 1):
        sing.append(cmath.exp(sing[-1]) + p.a)
    assert min(float(np.min(np.abs(jt.sigma0 - s))) for s in sing) >= 1e-3
    assert jt.trap.c == pytest.approx(-math.log(eps))
    assert isinstance(jt.sigma, AccessArc)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from expoweb.growth import GrowthConstants
from expoweb.orbits import Label, classify_point
from expoweb.raster import (GridSpec, Mask, SeparationFailure, classification_mask,
                            complement_components, default_samples, enclosed_region,
                            labels_mask, mask_connected, nested_chain,
                            pairwise_separation_witness, rasterize, separates_point,
                            spiders_web_verdict, subsample_offsets)

G64 = GridSpec((-1.0, 1.0), (-1.0, 1.0), 64, 64)


def ring_mask(grid, radii, width=0.03, spoke=True):
    """Square rings |max(|x|,|y|) - r| <= width, optionally joined by a spoke."""
    z = grid.centers()
    d = np.maximum(np.abs(z.real), np.abs(z.imag))
    bits = np.zeros(z.shape, dtype=bool)
    for r in radii:
        bits |= np.abs(d - r) <= width
    if spoke:
        bits |= (np.abs(z.imag) <= width) & (z.real >= min(radii) - width) & (z.real <= max(radii) + width)
    return Mask(grid, bits)


def test_grid_geometry():
    g = GridSpec((-2, 2), (-1, 1), 40, 20)
    assert g.dx == pytest.approx(0.1) and g.dy == pytest.approx(0.1)
    c = g.centers()
    assert c.shape == (20, 40)
    assert c[0, 0] == pytest.approx(-1.95 + 0.95j)
    assert c[-1, -1] == pytest.approx(1.95 - 0.95j)
    assert g.pixel_of(-1.95 + 0.95j) == (0, 0)
    assert g.center_of(*g.pixel_of(0.33 - 0.41j)) == pytest.approx(0.35 - 0.45j)
    with pytest.raises(ValueError):
        g.pixel_of(3 + 0j)
    with pytest.raises(ValueError):
        GridSpec((0, 1), (0, 1), 4, 10)
    with pytest.raises(ValueError):
        GridSpec((1, 0), (0, 1), 10, 10)
    sq = GridSpec.square(1 + 1j, 2.0, 16)
    assert sq.re_range == (-1.0, 3.0) and sq.im_range == (-1.0, 3.0)


def test_mask_validation_and_pgm():
    with pytest.raises(ValueError):
        Mask(G64, np.zeros((10, 10), bool))
    m = Mask(G64, np.eye(64, dtype=bool))
    with pytest.raises(ValueError):
        m.bits[0, 0] = False
    pgm = m.to_pgm()
    assert pgm.startswith(b"P5\n64 64\n255\n")
    body = np.frombuffer(pgm[len(b"P5\n64 64\n255\n"):], dtype=np.uint8).reshape(64, 64)
    assert np.array_equal(body == 255, m.bits)
    m2 = m.with_pixels([G64.center_of(0, 0)], False)
    assert not m2.bits[0, 0] and m.bits[0, 0]


def test_rasterize_disc_and_threads():
    pred = lambda z: np.abs(z) <= 0.5
    a = rasterize(pred, G64, threads=1)
    b = rasterize(pred, G64, threads=4, tile_rows=5)
    assert np.array_equal(a.bits, b.bits)
    assert np.array_equal(a.bits, np.abs(G64.centers()) <= 0.5)
    area = a.bits.sum() * G64.dx * G64.dy
    assert area == pytest.approx(np.pi / 4, rel=0.05)


def test_rasterize_any_rule():
    # a thin vertical line between pixel centers is missed at s = 1 and caught at s = 3
    x0 = G64.re_range[0] + 10 * G64.dx + 0.2 * G64.dx
    pred = lambda z: np.abs(z.real - x0) <= 0.1 * G64.dx
    assert not rasterize(pred, G64).bits.any()
    caught = rasterize(pred, G64, supersample=3).bits
    assert caught[:, 10].all() and caught.sum() == 64
    assert len(subsample_offsets(G64, 3)) == 9 and 0j in subsample_offsets(G64, 3)
    with pytest.raises(ValueError):
        subsample_offsets(G64, 0)


@settings(max_examples=60, deadline=None)
@given(arrays(bool, (12, 15)))
def test_components_match_flood_fill(bits):
    g = GridSpec((0, 15), (0, 12), 15, 12)
    comps = complement_components(Mask(g, bits))
    lab, frame = oracles.flood_components(bits)
    assert comps.count == lab.max()
    assert oracles.same_partition(comps.labels, lab)
    for k in range(1, comps.count + 1):
        ref = lab[comps.labels == k][0]
        assert comps.is_bounded(k) == (ref not in frame)


def test_component_report():
    m = ring_mask(G64, [0.5], spoke=False)
    comps = complement_components(m)
    rep = comps.report()
    assert len(rep) == 2
    inner = [r for r in rep if r["bounded"]]
    assert len(inner) == 1 and inner[0]["size"] == (~m.bits & (np.abs(G64.centers().real) < 0.5)
                                                    & (np.abs(G64.centers().imag) < 0.5)).sum()


def test_all_true_and_all_false():
    full = Mask(G64, np.ones((64, 64), bool))
    assert complement_components(full).count == 0
    assert mask_connected(full)
    empty = Mask(G64, np.zeros((64, 64), bool))
    assert complement_components(empty).count == 1
    assert not separates_point(empty, 0j)
    # a point on a full mask: clearing its pixel leaves a one-pixel bounded hole
    assert separates_point(full, 0.1 + 0.1j)


def test_separates_point_annulus():
    m = ring_mask(G64, [0.5], spoke=False)
    assert separates_point(m, 0j)
    assert not separates_point(m, 0.9 + 0.9j)
    on_ring = complex(0.5, 0.0)
    assert m.bits[G64.pixel_of(on_ring)]
    # clearing the pixel of a one-pixel ring opens it; a thick ring survives
    assert not separates_point(m, on_ring)
    assert separates_point(ring_mask(G64, [0.5], width=0.1, spoke=False), on_ring)
    # a gap in the ring lets the inside out
    z = G64.centers()
    gap = m.bits & (np.abs(z.imag) < 0.1) & (z.real > 0)
    opened = Mask(G64, m.bits & ~gap)
    assert not separates_point(opened, 0j)


@settings(max_examples=40, deadline=None)
@given(arrays(bool, (16, 16)), arrays(bool, (16, 16)), st.integers(0, 15), st.integers(0, 15))
def test_separation_is_monotone_under_growth(bits, extra, r, c):
    g = GridSpec((0, 16), (0, 16), 16, 16)
    z = g.center_of(r, c)
    if separates_point(Mask(g, bits), z):
        assert separates_point(Mask(g, bits | extra), z)


def test_spiders_web_on_rings_with_spoke():
    g = GridSpec((-1, 1), (-1, 1), 128, 128)
    m = ring_mask(g, [0.15, 0.35, 0.55, 0.9])
    rep = spiders_web_verdict(m)
    assert rep.connected and rep.verdict and not rep.failing
    assert len(rep.chain) >= 3
    sizes = [d.size for d in rep.chain]
    assert sizes == sorted(sizes) and len(set(sizes)) == len(sizes)
    d = rep.as_dict()
    assert d["verdict"] and len(d["samples"]) == 64
    assert all(separates_point(m, s) for s, _ in rep.samples)


def test_spiders_web_fails_without_spoke():
    g = GridSpec((-1, 1), (-1, 1), 128, 128)
    rep = spiders_web_verdict(ring_mask(g, [0.15, 0.35, 0.55, 0.9], spoke=False))
    assert not rep.connected and not rep.verdict
    # every sample is still enclosed; connectivity alone fails
    assert not rep.failing


def test_spiders_web_reports_unenclosed_samples():
    g = GridSpec((-1, 1), (-1, 1), 128, 128)
    m = ring_mask(g, [0.1, 0.2], spoke=True)
    rep = spiders_web_verdict(m)
    assert rep.connected and not rep.verdict and rep.failing
    for s in rep.failing:
        assert not separates_point(m, s)


def test_default_samples_lie_in_the_center():
    s = default_samples(G64)
    assert len(s) == 64
    assert all(abs(z.real) <= 0.5 and abs(z.imag) <= 0.5 for z in s)


def test_enclosed_region_and_chain():
    g = GridSpec((-1, 1), (-1, 1), 128, 128)
    m = ring_mask(g, [0.3, 0.6], spoke=False)
    region = enclosed_region(m, 0j, 0.45)
    z = g.centers()
    inside = np.maximum(np.abs(z.real), np.abs(z.imag)) < 0.27
    assert region[inside].all()
    assert not region[np.maximum(np.abs(z.real), np.abs(z.imag)) > 0.4].any()
    chain = nested_chain(m, 0j, [0.2, 0.45, 0.8])
    assert [round(d.radius, 2) for d in chain] == [0.45, 0.8]
    assert chain[0].inner_radius < chain[1].inner_radius


def test_pairwise_witness():
    g = GridSpec((-1, 1), (-1, 1), 128, 128)
    m = ring_mask(g, [0.3, 0.6], spoke=False)
    w = pairwise_separation_witness(m, 0j, 0.45 + 0j)
    assert w.p_label != w.q_label and w.p_size > 0 and w.q_size > 0
    assert set(w.as_dict()) == {"p_component", "q_component", "p_size", "q_size"}
    with pytest.raises(SeparationFailure):
        pairwise_separation_witness(m, 0j, 0.1 + 0.1j)
    with pytest.raises(SeparationFailure):
        pairwise_separation_witness(m, 0j, 0.9 + 0.9j)
    with pytest.raises(ValueError):
        pairwise_separation_witness(m, 0j, 0j)
    on = complex(0.3, 0.0)
    with pytest.raises(ValueError):
        pairwise_separation_witness(m, 0j, on)
    thick = ring_mask(g, [0.3, 0.6], width=0.1, spoke=False)
    w2 = pairwise_separation_witness(thick, 0j, on, clear_pixels=True)
    assert w2.p_label != w2.q_label and w2.q_size == 1


def test_classification_mask_matches_point_classifier(p2, cycle2):
    cfg = GrowthConstants.make(p2, 3.0)
    g = GridSpec((-4, 4), (-4, 4), 24, 24)
    m = classification_mask(p2, g, cfg, 3, cycle2)
    z = g.centers()
    members = (Label.A_R_VERIFIED, Label.BASIN)
    for r in range(0, 24, 3):
        for c in range(0, 24, 3):
            assert m.bits[r, c] == (classify_point(z[r, c], p2, cfg, 3, cycle2).label in members)
    lab = np.full((24, 24), Label.UNDECIDED.value)
    lab[0, 0] = Label.BASIN.value
    assert labels_mask(lab, g).bits.sum() == 1
    sup = classification_mask(p2, g, cfg, 3, cycle2, supersample=3)
    assert np.all(sup.bits >= m.bits)

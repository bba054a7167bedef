"""Perpendicular (Jacobi-type) solutions, conjugate points, terminator scan."""
import numpy as np
import pytest

import geotomo as gt


DISC = gt.circle_domain(1.0)


def test_flat_solution_is_time():
    # zero curvature: b'' = 0 with b(0)=0, b'(0)=1 gives b = t exactly per step
    path, tr = gt.trace_jacobi(gt.euclidean_metric(), DISC, np.pi, 0.1, 1.0, 1e-3)
    assert np.abs(tr.b - path.ts).max() < 1e-9
    assert np.abs(tr.bdot - 1.0).max() < 1e-9
    assert tr.exit_b == pytest.approx(path.tau, abs=1e-9)


def test_unit_curvature_solution_is_sine():
    # kappa = 1 everywhere: b = sin(t); use a domain long enough to see most
    # of a half-period
    m = gt.const_pos_metric(1.0)
    d = gt.circle_domain(1.2)
    path, tr = gt.trace_jacobi(m, d, np.pi, 0.0, 1.0, 1e-3)
    assert path.tau > np.pi  # the chord is long enough to contain t = pi
    assert np.abs(tr.b - np.sin(path.ts)).max() < 1e-7


def test_scaled_curvature_shrinks_the_zero():
    # with beta_c = 4 the first zero of b sits at pi/2 instead of pi
    m = gt.const_pos_metric(1.0)
    d = gt.circle_domain(1.2)
    pts = gt.conjugate_points(m, d, np.pi, 0.0, 1e-3, beta_c=4.0)
    assert len(pts) >= 1
    assert pts[0].t == pytest.approx(np.pi / 2, abs=1e-3)


def test_first_conjugate_time_and_location_unit_sphere_metric():
    # along the diameter the first zero is at t = pi, landing at the image of
    # the antipode, x = 1/1.2 on the axis
    m = gt.const_pos_metric(1.0)
    d = gt.circle_domain(1.2)
    pts = gt.conjugate_points(m, d, np.pi, 0.0, 1e-3)
    assert len(pts) == 1
    assert pts[0].t == pytest.approx(np.pi, abs=1e-3)
    assert pts[0].x == pytest.approx(1.0 / 1.2, abs=2e-3)
    assert pts[0].y == pytest.approx(0.0, abs=2e-3)


def test_flat_rays_have_no_conjugate_points():
    for beta in np.linspace(0.0, 2 * np.pi, 7, endpoint=False):
        for alpha in (-0.7, 0.0, 0.4):
            pts = gt.conjugate_points(gt.euclidean_metric(), DISC,
                                      float(beta), alpha, 2e-3)
            assert pts == []


def test_negative_curvature_never_focuses():
    m = gt.const_neg_metric(2.0)
    pts = gt.conjugate_points(m, DISC, np.pi, 0.05, 1e-3)
    assert pts == []


def test_zero_in_final_refined_interval_is_found():
    # chord tuned so the first zero lands between the last inside sample and
    # the refined exit: still reported
    m = gt.const_pos_metric(1.0)
    # diameter of circle(R) has length 4 atan(R); R chosen so that's just
    # above pi
    R = np.tan(np.pi / 4 + 0.01)
    d = gt.circle_domain(R)
    pts = gt.conjugate_points(m, d, np.pi, 0.0, 1e-3)
    assert len(pts) == 1
    assert pts[0].t == pytest.approx(np.pi, abs=5e-3)


def test_is_beta_free_ladder_monotone():
    m = gt.const_pos_metric(2.0)
    ladder = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0]
    free = [gt.is_beta_free(m, DISC, b, dt=5e-3, grid=(64, 32)) for b in ladder]
    assert free == sorted(free, reverse=True)  # True ... True False ... False
    assert free[2] is True     # beta_c = 1: simple pair
    assert free[-2] is False   # beta_c = 4: zero fits inside the longest chord


def test_beta_free_transition_bracket():
    # longest chord of const_pos(2) on the unit disc is 8 atan(0.5) = 3.7092;
    # the scaled solution first vanishes at 2 pi / sqrt(beta_c), so the
    # transition sits at beta_c = (2 pi / 3.7092)^2 = 2.869
    m = gt.const_pos_metric(2.0)
    assert gt.is_beta_free(m, DISC, 2.80, dt=5e-3, grid=(64, 32))
    assert not gt.is_beta_free(m, DISC, 2.95, dt=5e-3, grid=(64, 32))


def test_is_beta_free_lens_pair():
    assert gt.is_beta_free(gt.lens_metric(k=0.3, sigma=0.25, center=(0.2, 0.0)),
                           DISC, 1.0, dt=5e-3, grid=(64, 32))
    assert not gt.is_beta_free(gt.lens_metric(k=1.2, sigma=0.25, center=(0.2, 0.0)),
                               DISC, 1.0, dt=5e-3, grid=(64, 32))


def test_terminator_flat_returns_cap():
    got = gt.terminator(gt.euclidean_metric(), DISC, beta_cap=16.0,
                        dt=1e-2, grid=(16, 8))
    assert got == 16.0


def test_terminator_const_pos_brackets_chord_prediction():
    m = gt.const_pos_metric(2.0)
    got = gt.terminator(m, DISC, eps=1e-3, dt=5e-3, grid=(64, 32))
    assert 2.82 <= got <= 2.93


def test_terminator_validates_inputs():
    with pytest.raises(ValueError):
        gt.terminator(gt.euclidean_metric(), DISC, eps=0.0)
    with pytest.raises(ValueError):
        gt.terminator(gt.euclidean_metric(), DISC, beta_cap=-1.0)


def test_scan_starved_budget_raises_not_applicable():
    with pytest.raises(gt.NotApplicable):
        gt.is_beta_free(gt.euclidean_metric(), DISC, 1.0, dt=1e-2,
                        grid=(8, 4), max_steps=5)


def test_trace_jacobi_trapped():
    with pytest.raises(gt.TrappedGeodesic):
        gt.trace_jacobi(gt.euclidean_metric(), DISC, 0.0, 0.0, 1.0, 1e-3,
                        max_steps=10)


def test_generic_engine_matches_kernels():
    R = 1.5
    mr = gt.radial_metric(
        c=lambda r: (r * r + R * R) / (2 * R * R),
        dc=lambda r: r / (R * R),
        d2c=lambda r: np.full_like(np.asarray(r, dtype=float), 1.0 / (R * R)),
    )
    mc = gt.const_pos_metric(R)
    _, ta = gt.trace_jacobi(mr, DISC, 0.9, 0.35, 1.0, 1e-3)
    _, tb = gt.trace_jacobi(mc, DISC, 0.9, 0.35, 1.0, 1e-3)
    assert np.abs(ta.b - tb.b).max() < 1e-12
    assert abs(ta.exit_b - tb.exit_b) < 1e-12
    # scan route agrees too
    assert gt.is_beta_free(mr, DISC, 1.0, dt=1e-2, grid=(16, 8)) == \
        gt.is_beta_free(mc, DISC, 1.0, dt=1e-2, grid=(16, 8))

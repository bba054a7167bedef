"""Ray marching: exit times, refined boundary crossings, basepoints."""
import numpy as np
import pytest

import geotomo as gt
from geotomo.geodesic_flow import batch_emit, batch_exit, default_max_steps


EUC = gt.euclidean_metric()
DISC = gt.circle_domain(1.0)


def test_euclidean_diameter():
    p = gt.trace_from_influx(EUC, DISC, np.pi, 0.0, 1e-3)
    assert p.tau == pytest.approx(2.0, abs=1e-9)
    assert p.exit_x == pytest.approx(1.0, abs=1e-9)
    assert p.exit_y == pytest.approx(0.0, abs=1e-9)
    # straight ray: y stays 0, theta stays 0
    assert np.abs(p.ys).max() < 1e-14
    assert np.abs(p.thetas - p.thetas[0]).max() == 0.0


def test_euclidean_chord_lengths_fan():
    # unit disc chord entered at incidence alpha has length 2 cos(alpha)
    alphas = np.linspace(-1.4, 1.4, 50)
    betas = np.linspace(0.0, 2 * np.pi, 50, endpoint=False)
    for b, a in zip(betas, alphas):
        p = gt.trace_from_influx(EUC, DISC, float(b), float(a), 1e-3)
        assert p.tau == pytest.approx(2.0 * np.cos(a), abs=1e-8)
        assert np.abs(p.thetas - p.thetas[0]).max() <= 1e-13


def test_exit_lands_on_boundary():
    for d in (DISC, gt.ellipse_domain(1.2, 0.8), gt.perturbed_domain(1.0, 0.05)):
        for b, a in ((0.0, 0.3), (1.7, -0.8), (4.0, 0.05)):
            p = gt.trace_from_influx(EUC, d, b, a, 1e-3)
            rho = np.hypot(p.exit_x, p.exit_y)
            rb = float(d.r(np.arctan2(p.exit_y, p.exit_x)))
            assert abs(rho - rb) < 1e-8 * d.r_max


def test_samples_inside_then_one_outside():
    # the trace keeps every inside sample plus the first outside one; the
    # refined crossing time tau falls in that last step
    p = gt.trace_from_influx(gt.const_pos_metric(1.5), DISC, 0.7, 0.4, 1e-3)
    r = np.hypot(p.xs, p.ys)
    assert (r[:-1] <= 1.0 + 1e-12).all()
    assert r[-1] > 1.0
    assert p.ts[-2] <= p.tau <= p.ts[-1]


def test_rk4_fourth_order_interior_state():
    # positional error at a fixed interior time T against a dt/64 reference
    # should shrink ~16x when dt halves
    m = gt.const_pos_metric(1.2)
    beta, alpha, T = np.pi, 0.2, 1.5

    def state_at(dt):
        p = gt.trace_from_influx(m, DISC, beta, alpha, dt)
        k = int(round(T / dt))
        return np.array([p.xs[k], p.ys[k], p.thetas[k]])

    ref = state_at(0.02 / 64)
    e1 = np.linalg.norm(state_at(0.02) - ref)
    e2 = np.linalg.norm(state_at(0.01) - ref)
    assert 12.0 <= e1 / e2 <= 20.0


def test_clairaut_invariant_on_centered_lens():
    # rotational symmetry conserves r e^{lam} sin(angle between ray and radius)
    m = gt.lens_metric(k=0.8, sigma=0.25, center=(0.0, 0.0))
    p = gt.trace_from_influx(m, DISC, 0.9, 0.55, 1e-3)
    r = np.hypot(p.xs, p.ys)
    phi = np.arctan2(p.ys, p.xs)
    c = r * np.exp(m.lam(p.xs, p.ys)) * np.sin(p.thetas - phi)
    assert np.abs(c - c[0]).max() < 1e-6


def test_time_reversal_returns_to_start():
    m = gt.lens_metric(k=0.6, sigma=0.3, center=(0.1, -0.1))
    p = gt.trace_from_influx(m, DISC, 2.2, -0.35, 5e-4)
    x0, y0, _ = gt.boundary_point_and_normal(DISC, 2.2)
    # march back from the middle of the ray; the reversed exit is the entry
    k = len(p.xs) // 2
    back = gt.trace_from_interior(m, DISC, float(p.xs[k]), float(p.ys[k]),
                                  float(p.thetas[k]), 5e-4, mode="backward")
    assert np.hypot(back.exit_x - x0, back.exit_y - y0) < 1e-6


def test_basepoint_roundtrip():
    m = gt.const_pos_metric(2.0)
    p = gt.trace_from_influx(m, DISC, 1.1, 0.25, 1e-3)
    k = len(p.xs) // 2
    bp = gt.basepoint(m, DISC, float(p.xs[k]), float(p.ys[k]),
                      float(p.thetas[k]), 1e-3)
    assert bp.beta == pytest.approx(1.1, abs=1e-6)
    assert bp.alpha == pytest.approx(0.25, abs=1e-6)


def test_basepoint_batch_matches_scalar(rng):
    m = gt.lens_metric(k=0.5, sigma=0.3, center=(0.0, 0.2))
    pts = rng.uniform(-0.5, 0.5, size=(20, 2))
    thetas = rng.uniform(0.0, 2 * np.pi, 20)
    from geotomo.geodesic_flow import batch_basepoints
    beta, alpha, trapped, inconsistent = batch_basepoints(
        m, DISC, pts[:, 0], pts[:, 1], thetas, 2e-3)
    assert not trapped.any() and not inconsistent.any()
    for i in range(0, 20, 5):
        one = gt.basepoint(m, DISC, float(pts[i, 0]), float(pts[i, 1]),
                           float(thetas[i]), 2e-3)
        assert one.beta == beta[i] and one.alpha == alpha[i]


def test_unit_speed_consistency():
    # finite-difference velocity of the samples matches e^{-lam} (cos, sin)
    m = gt.const_neg_metric(2.0)
    p = gt.trace_from_influx(m, DISC, 0.3, 0.1, 1e-3)
    vx = np.gradient(p.xs, p.dt)
    vy = np.gradient(p.ys, p.dt)
    sp = np.exp(-m.lam(p.xs, p.ys))
    err = np.hypot(vx - sp * np.cos(p.thetas), vy - sp * np.sin(p.thetas))
    assert err[1:-1].max() < 5e-6   # interior stencils only


def test_engines_agree(rng):
    m = gt.const_pos_metric(1.3)
    pts = rng.uniform(-0.4, 0.4, size=(12, 2))
    th = rng.uniform(0, 2 * np.pi, 12)
    xa, ya, ta, taua, tra = batch_exit(m, DISC, pts[:, 0], pts[:, 1], th, 1e-3,
                                       engine="kernels")
    xb, yb, tb, taub, trb = batch_exit(m, DISC, pts[:, 0], pts[:, 1], th, 1e-3,
                                       engine="generic")
    assert not tra.any() and not trb.any()
    assert np.abs(xa - xb).max() < 1e-12
    assert np.abs(ya - yb).max() < 1e-12
    assert np.abs(ta - tb).max() < 1e-12
    assert np.abs(taua - taub).max() < 1e-12


def test_trapped_raises_with_partial_path():
    with pytest.raises(gt.TrappedGeodesic) as exc:
        gt.trace_from_influx(EUC, DISC, np.pi, 0.0, 1e-3, max_steps=10)
    assert exc.value.path is not None
    assert len(exc.value.path.xs) >= 10
    assert exc.value.where == (np.pi, 0.0)


def test_influx_rejects_grazing_alpha():
    for bad in (np.pi / 2, -np.pi / 2, 2.0):
        with pytest.raises(ValueError):
            gt.trace_from_influx(EUC, DISC, 0.0, bad, 1e-3)


def test_interior_trace_validates_start():
    with pytest.raises(ValueError):
        gt.trace_from_interior(EUC, DISC, 1.0, 0.0, 0.0, 1e-3)  # on boundary
    with pytest.raises(ValueError):
        gt.trace_from_interior(EUC, DISC, 0.0, 0.0, 0.0, 1e-3, mode="sideways")


def test_default_step_budget():
    assert default_max_steps(DISC, 0.01) == 800
    assert default_max_steps(gt.ellipse_domain(1.2, 0.8), 0.01) == 960


def test_self_convergence_against_fine_reference():
    # coarse samples land on every 20th fine sample; positions must agree
    m = gt.const_pos_metric(1.2)
    dt = 1e-3
    pc = gt.trace_from_influx(m, DISC, 2.6, -0.45, dt)
    pf = gt.trace_from_influx(m, DISC, 2.6, -0.45, dt / 20)
    kmax = min(len(pc.xs), (len(pf.xs) - 1) // 20 + 1)
    dev = np.hypot(pc.xs[:kmax] - pf.xs[: 20 * kmax : 20],
                   pc.ys[:kmax] - pf.ys[: 20 * kmax : 20])
    assert dev.max() <= 1e-8


def test_batch_emit_matches_trace():
    # emitted flat samples for one ray are the trace's inside samples
    # (per-ray order is engine-dependent, so compare as sorted sets)
    m = gt.lens_metric(k=0.4, sigma=0.3, center=(0.0, 0.0))
    x0, y0, nu = gt.boundary_point_and_normal(DISC, 0.8)
    th0 = nu + 0.2
    ray_idx, sx, sy, sth, trapped = batch_emit(
        m, DISC, np.array([x0]), np.array([y0]), np.array([th0]), 1e-3)
    p = gt.trace_from_influx(m, DISC, 0.8, 0.2, 1e-3)
    assert not trapped[0]
    sel = ray_idx == 0
    inside_xs = p.xs[:-1]  # trace keeps one outside sample at the end
    assert sel.sum() == len(inside_xs)
    assert np.array_equal(np.sort(sx[sel]), np.sort(inside_xs))
    assert np.array_equal(np.sort(sy[sel]), np.sort(p.ys[:-1]))

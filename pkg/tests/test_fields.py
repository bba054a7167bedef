"""Grids, samplers, masked gradients, phantoms and on-disk formats."""
import numpy as np
import pytest

import geotomo as gt
from geotomo.fields import grad_centered, grid_from_function, zero_grid


def test_grid_geometry():
    d = gt.circle_domain(1.0)
    g = zero_grid(d, 11)
    assert g.h == pytest.approx(0.2)
    ax, ay = g.coords()
    assert ax[0] == -1.0 and ax[-1] == 1.0
    assert g.inside_mask[5, 5]          # center
    assert not g.inside_mask[0, 0]      # corner of the square, outside the disc
    assert g.values.shape == (11, 11)


def test_with_values_masks_outside():
    d = gt.circle_domain(1.0)
    g = zero_grid(d, 21)
    g2 = g.with_values(np.ones((21, 21)))
    assert g2.values[10, 10] == 1.0
    assert g2.values[0, 0] == 0.0       # outside forced back to zero


def test_bilinear_reproduces_bilinear_functions(rng):
    # a true bilinear function is reproduced exactly away from the mask edge
    d = gt.circle_domain(1.0)
    fn = lambda x, y: 2.0 + 3.0 * x - 1.5 * y + 0.5 * x * y
    g = grid_from_function(fn, d, 81)
    pts = rng.uniform(-0.5, 0.5, size=(200, 2))
    got = gt.sample_bilinear(g, pts[:, 0], pts[:, 1])
    assert np.abs(got - fn(pts[:, 0], pts[:, 1])).max() < 1e-13


def test_bilinear_outside_is_zero():
    d = gt.circle_domain(1.0)
    g = grid_from_function(lambda x, y: np.ones_like(x), d, 41)
    got = gt.sample_bilinear(g, np.array([1.5, 0.0]), np.array([0.0, -1.5]))
    assert (got == 0.0).all()


def test_field_sampler_clips_to_domain():
    d = gt.ellipse_domain(1.2, 0.8)
    s = gt.FieldSampler(d, lambda x, y: np.ones_like(x))
    vals = s(np.array([0.0, 1.19, 0.0]), np.array([0.0, 0.0, 0.81]))
    assert vals[0] == 1.0 and vals[1] == 1.0 and vals[2] == 0.0


def test_grad_centered_exact_on_quadratics():
    # centered differences are exact for quadratics; check interior nodes
    d = gt.circle_domain(1.0)
    g = grid_from_function(lambda x, y: x * x - 2.0 * y * y + x * y, d, 41)
    gx, gy = grad_centered(g)
    X, Y = g.meshgrid()
    m = g.inside_mask
    interior = (np.hypot(X, Y) < 0.8) & m
    assert np.abs((gx - (2 * X + Y))[interior]).max() < 1e-12
    assert np.abs((gy - (-4 * Y + X))[interior]).max() < 1e-12


def test_grad_centered_masking_rules():
    d = gt.circle_domain(1.0)
    g = grid_from_function(lambda x, y: x + y, d, 31)
    gx, gy = grad_centered(g)
    assert gx[0, 0] == 0.0 and gy[0, 0] == 0.0   # outside node stays zero
    assert np.isfinite(gx).all() and np.isfinite(gy).all()


def test_grad_centered_second_order_in_the_interior():
    # error on a smooth field decays ~4x per refinement where the stencil is
    # centered (one-sided rim nodes are excluded: they are first order)
    d = gt.circle_domain(1.0)
    errs = []
    for n in (41, 81):
        g = grid_from_function(lambda x, y: np.sin(2 * x) * np.cos(2 * y), d, n)
        gx, _ = grad_centered(g)
        X, Y = g.meshgrid()
        interior = np.hypot(X, Y) < 0.85
        want = 2 * np.cos(2 * X) * np.cos(2 * Y)
        errs.append(np.abs((gx - want))[interior].max())
    assert errs[1] < errs[0] / 3.5


def test_rel_l2_basic():
    d = gt.circle_domain(1.0)
    g = grid_from_function(lambda x, y: 1.0 + x, d, 21)
    assert gt.rel_l2(g, g) == 0.0
    g2 = g.with_values(1.1 * g.values)
    assert gt.rel_l2(g2, g) == pytest.approx(0.1, rel=1e-9)
    z = zero_grid(d, 21)
    assert gt.rel_l2(z, z) == 0.0
    assert gt.rel_l2(g, z) == np.inf


def test_make_phantom_grid_matches_sampler_at_nodes():
    d = gt.circle_domain(1.0)
    for kind in ("smooth_bumps", "disc_pack"):
        g, s = gt.make_phantom(kind, d, 41)
        X, Y = g.meshgrid()
        direct = np.where(g.inside_mask, s(X, Y), 0.0)
        assert np.array_equal(g.values, direct)


def test_make_phantom_explicit_features():
    d = gt.circle_domain(1.0)
    g, s = gt.make_phantom("smooth_bumps", d, 51, features=[(0.0, 0.0, 0.2, 2.0)])
    assert s(0.0, 0.0) == pytest.approx(2.0)
    # peak decays away from the center
    assert s(0.3, 0.0) < 2.0 * np.exp(-0.3**2 / (2 * 0.2**2)) + 1e-12


def test_make_phantom_warns_on_feature_outside_domain():
    d = gt.circle_domain(1.0)
    with pytest.warns(UserWarning):
        gt.make_phantom("smooth_bumps", d, 31, features=[(2.0, 2.0, 0.1, 1.0)])


def test_make_phantom_random_placement_is_seeded():
    d = gt.circle_domain(1.0)
    g1, _ = gt.make_phantom("disc_pack", d, 41, rng=np.random.default_rng(7))
    g2, _ = gt.make_phantom("disc_pack", d, 41, rng=np.random.default_rng(7))
    assert np.array_equal(g1.values, g2.values)
    with pytest.raises(ValueError):
        gt.make_phantom("checkerboard", d, 41)


def test_grid_csv_round_trip(tmp_path):
    d = gt.ellipse_domain(1.2, 0.8)
    g, _ = gt.make_phantom("smooth_bumps", d, 33)
    p = tmp_path / "g.csv"
    gt.write_grid_csv(g, str(p))
    back = gt.read_grid_csv(str(p), d)
    assert back.n == g.n and back.r_max == g.r_max
    assert np.array_equal(back.values, g.values)
    assert np.array_equal(back.inside_mask, g.inside_mask)


def test_grid_csv_rejects_foreign_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,y,value\n0,0,1.0\n")
    with pytest.raises(ValueError):
        gt.read_grid_csv(str(p), gt.circle_domain(1.0))


def test_pgm_format(tmp_path):
    vals = np.array([[0.0, 0.5], [1.0, 0.25]])
    p = tmp_path / "img.pgm"
    gt.write_pgm(vals, str(p))
    lines = p.read_text().strip().splitlines()
    assert lines[0] == "P2"
    assert lines[1] == "2 2"
    assert lines[2] == "255"
    # min-max scaling: 0 -> 0, 1 -> 255; rows top-down in y
    rows = [list(map(int, ln.split())) for ln in lines[3:]]
    assert rows[0] == [128, 64]   # y = max row: values 0.5, 0.25
    assert rows[1] == [0, 255]


def test_pgm_constant_image(tmp_path):
    p = tmp_path / "flat.pgm"
    gt.write_pgm(np.full((3, 3), 2.5), str(p))
    body = p.read_text().strip().splitlines()[3:]
    assert all(set(ln.split()) == {"0"} for ln in body)

"""Perpendicular (Jacobi-type) solutions along geodesics and the
curvature-scaling diagnostics built on them.

Along a unit-speed geodesic, the scaled perpendicular equation

    b''(t) + beta_c * K(gamma(t)) * b(t) = 0,    b(0) = 0,  b'(0) = 1,

with K the Gauss curvature, controls the spreading of nearby geodesics.
beta_c = 1 is the honest Jacobi equation; zeros of b past t = 0 are conjugate
points.  Larger beta_c exaggerates curvature, and the supremum of beta_c for
which *no* geodesic in the domain develops a zero (the terminator value,
found here by bisection) measures how far the pair (metric, domain) sits from
losing simplicity: terminator > 1 means no conjugate points for the true
curvature, with quantitative room to spare.

The 5-dimensional system (position, direction, b, b') integrates with the
same fixed-step RK4 and exit handling as the base geodesic march, so the
diagnostics see exactly the geometry the transforms use.  Zeros are detected
as sign changes between consecutive samples (plus the final partial interval
to the refined exit) with linear interpolation of the crossing time; zeros at
t <= t_min (default 10*dt) are attributed to the initial b(0) = 0 and skipped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels
from .errors import NotApplicable, TrappedGeodesic
from .geodesic_flow import (GeodesicPath, InfluxCoord, _inside_arr,
                            _use_kernels, default_max_steps)
from .geometry import (IsothermalMetric, StarShapedDomain,
                       boundary_point_and_normal, validate_pair, wrap_two_pi)
from .ray_transform import build_influx_grid

HALF_PI = 0.5 * np.pi


@dataclass
class JacobiTrace:
    """Perpendicular solution sampled along one geodesic.

    b and bdot align index-for-index with the samples of the companion
    GeodesicPath (the final entry of which is the first outside sample);
    exit_b / exit_bdot hold the bisection-refined values at time tau.
    """

    beta_c: float
    b: np.ndarray
    bdot: np.ndarray
    exit_b: float
    exit_bdot: float
    tau: float


class ConjugatePoint(NamedTuple):
    t: float
    x: float
    y: float


def _curvature_arr(m, x, y):
    return -np.exp(-2.0 * m.lam(x, y)) * m.lap_lam(x, y)


def _rk4_jac_generic(m, x, y, th, b, bd, dt, beta_c):
    """One RK4 step of the coupled ray + perpendicular system (array-friendly)."""

    def deriv(x, y, th, b, bd):
        s = np.exp(-m.lam(x, y))
        gx, gy = m.grad_lam(x, y)
        c = np.cos(th)
        sn = np.sin(th)
        return (s * c, s * sn, s * (c * gy - sn * gx), bd,
                -beta_c * _curvature_arr(m, x, y) * b)

    k1 = deriv(x, y, th, b, bd)
    h2 = 0.5 * dt
    k2 = deriv(x + h2 * k1[0], y + h2 * k1[1], th + h2 * k1[2],
               b + h2 * k1[3], bd + h2 * k1[4])
    k3 = deriv(x + h2 * k2[0], y + h2 * k2[1], th + h2 * k2[2],
               b + h2 * k2[3], bd + h2 * k2[4])
    k4 = deriv(x + dt * k3[0], y + dt * k3[1], th + dt * k3[2],
               b + dt * k3[3], bd + dt * k3[4])
    sixth = dt / 6.0
    return (x + sixth * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            y + sixth * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
            th + sixth * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]),
            b + sixth * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3]),
            bd + sixth * (k1[4] + 2 * k2[4] + 2 * k3[4] + k4[4]))


def _refine_exit_jac_generic(m, d, x, y, th, b, bd, dt, beta_c):
    """Bisect the step fraction of the crossing step; return (h, state-at-h)."""
    lo = np.zeros_like(x)
    hi = np.full_like(x, dt)
    for _ in range(20):
        mid = 0.5 * (lo + hi)
        qx, qy, _, _, _ = _rk4_jac_generic(m, x, y, th, b, bd, mid, beta_c)
        ins = _inside_arr(d, qx, qy)
        lo = np.where(ins, mid, lo)
        hi = np.where(ins, hi, mid)
    h = 0.5 * (lo + hi)
    qx, qy, qt, qb, qbd = _rk4_jac_generic(m, x, y, th, b, bd, h, beta_c)
    return h, qx, qy, qt, qb, qbd


def _collect_generic(m, d, x0, y0, th0, dt, max_steps, beta_c):
    """Single-ray jacobi march with full storage (closure engine)."""
    xs = [float(x0)]
    ys = [float(y0)]
    ths = [float(th0)]
    bs = [0.0]
    bds = [1.0]
    x, y, th, b, bd = float(x0), float(y0), float(th0), 0.0, 1.0
    for step in range(1, max_steps + 1):
        xn, yn, tn, bn, bdn = _rk4_jac_generic(
            m, np.asarray(x), np.asarray(y), np.asarray(th),
            np.asarray(b), np.asarray(bd), dt, beta_c)
        xn, yn, tn, bn, bdn = (float(xn), float(yn), float(tn), float(bn),
                               float(bdn))
        xs.append(xn)
        ys.append(yn)
        ths.append(tn)
        bs.append(bn)
        bds.append(bdn)
        if _inside_arr(d, np.asarray(xn), np.asarray(yn)):
            x, y, th, b, bd = xn, yn, tn, bn, bdn
        else:
            xa, ya, ta, ba, bda = (np.asarray([x]), np.asarray([y]),
                                   np.asarray([th]), np.asarray([b]),
                                   np.asarray([bd]))
            h, qx, qy, qt, qb, qbd = _refine_exit_jac_generic(
                m, d, xa, ya, ta, ba, bda, dt, beta_c)
            tau = (step - 1) * dt + float(h[0])
            return (np.array(xs), np.array(ys), np.array(ths), np.array(bs),
                    np.array(bds), float(qx[0]), float(qy[0]), float(qt[0]),
                    float(qb[0]), float(qbd[0]), tau, False)
    return (np.array(xs), np.array(ys), np.array(ths), np.array(bs),
            np.array(bds), x, y, th, b, bd, np.nan, True)


def trace_jacobi(m: IsothermalMetric, d: StarShapedDomain,
                 beta: float, alpha: float, beta_c: float, dt: float,
                 max_steps: Optional[int] = None
                 ) -> tuple[GeodesicPath, JacobiTrace]:
    """Trace the geodesic from influx coordinates together with its scaled
    perpendicular solution.  Raises TrappedGeodesic if it never exits."""
    validate_pair(m, d)
    if not (-HALF_PI < alpha < HALF_PI):
        raise ValueError(f"incidence angle {alpha} outside (-pi/2, pi/2)")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if max_steps is None:
        max_steps = default_max_steps(d, dt)
    x0, y0, nu = boundary_point_and_normal(d, beta)
    th0 = float(nu + alpha)

    if _use_kernels(m, d, "auto"):
        buf = np.empty(max_steps + 2)
        bufs = [buf.copy() for _ in range(5)]
        cnt, xe, ye, the, be, bde, tau, trapped = _kernels.march_jacobi_collect(
            m.code, m.code_params, d.code, d.code_params,
            float(x0), float(y0), th0, dt, max_steps, beta_c,
            bufs[0], bufs[1], bufs[2], bufs[3], bufs[4])
        sx, sy, sth, sb, sbd = (bufs[0][:cnt].copy(), bufs[1][:cnt].copy(),
                                bufs[2][:cnt].copy(), bufs[3][:cnt].copy(),
                                bufs[4][:cnt].copy())
    else:
        (sx, sy, sth, sb, sbd, xe, ye, the, be, bde, tau,
         trapped) = _collect_generic(m, d, x0, y0, th0, dt, max_steps, beta_c)

    path = GeodesicPath(dt=dt, xs=sx, ys=sy, thetas=wrap_two_pi(sth),
                        exit_x=float(xe), exit_y=float(ye),
                        exit_theta=float(wrap_two_pi(the)), tau=float(tau))
    trace = JacobiTrace(beta_c=float(beta_c), b=sb, bdot=sbd,
                        exit_b=float(be), exit_bdot=float(bde),
                        tau=float(tau))
    if trapped:
        raise TrappedGeodesic(
            f"ray from (beta={beta:.6g}, alpha={alpha:.6g}) still inside "
            f"after {max_steps} steps", path=path,
            where=InfluxCoord(float(beta), float(alpha)))
    return path, trace


def _zeros_from_trace(path: GeodesicPath, trace: JacobiTrace,
                      t_min: float) -> list[ConjugatePoint]:
    """Sign changes of b with interpolated times in (t_min, tau]."""
    out: list[ConjugatePoint] = []
    b = trace.b
    dt = path.dt
    n_inside = len(b) - 1  # last stored sample is the first outside one
    for i in range(n_inside - 1):
        b0, b1 = b[i], b[i + 1]
        if b0 * b1 < 0.0 or (b1 == 0.0 and b0 != 0.0):
            frac = b0 / (b0 - b1) if b0 != b1 else 1.0
            t = (i + frac) * dt
            if t > t_min:
                out.append(ConjugatePoint(
                    t,
                    float(path.xs[i] + frac * (path.xs[i + 1] - path.xs[i])),
                    float(path.ys[i] + frac * (path.ys[i + 1] - path.ys[i]))))
    # final partial interval: last inside sample -> refined exit state
    i = n_inside - 1
    b0, b1 = b[i], trace.exit_b
    if b0 * b1 < 0.0 or (b1 == 0.0 and b0 != 0.0):
        span = trace.tau - i * dt
        frac = b0 / (b0 - b1) if b0 != b1 else 1.0
        t = i * dt + frac * span
        if t > t_min:
            out.append(ConjugatePoint(
                t,
                float(path.xs[i] + frac * (path.exit_x - path.xs[i])),
                float(path.ys[i] + frac * (path.exit_y - path.ys[i]))))
    return out


def conjugate_points(m: IsothermalMetric, d: StarShapedDomain,
                     beta: float, alpha: float, dt: float,
                     beta_c: float = 1.0, max_steps: Optional[int] = None,
                     t_min: Optional[float] = None) -> list[ConjugatePoint]:
    """Conjugate points (zeros of the scaled perpendicular solution) along
    the geodesic from (beta, alpha), with linearly interpolated times.

    Zeros at t <= t_min (default 10*dt) are treated as the initial zero.
    """
    path, trace = trace_jacobi(m, d, beta, alpha, beta_c, dt, max_steps)
    if t_min is None:
        t_min = 10.0 * dt
    return _zeros_from_trace(path, trace, t_min)


def _scan_generic(m, d, x0, y0, th0, dt, max_steps, beta_c, t_min):
    """Vectorized zero scan for closure-backed geometry (any hit wins)."""
    x = np.asarray(x0, dtype=np.float64).copy()
    y = np.asarray(y0, dtype=np.float64).copy()
    th = np.asarray(th0, dtype=np.float64).copy()
    b = np.zeros_like(x)
    bd = np.ones_like(x)
    for step in range(1, max_steps + 1):
        if x.size == 0:
            return _kernels.SCAN_CLEAN
        xn, yn, tn, bn, bdn = _rk4_jac_generic(m, x, y, th, b, bd, dt, beta_c)
        ins = _inside_arr(d, xn, yn)
        t0 = (step - 1) * dt
        cross = ins & (b * bn < 0.0)
        if np.any(cross):
            tstar = t0 + dt * b[cross] / (b[cross] - bn[cross])
            if np.any(tstar > t_min):
                return _kernels.SCAN_ZERO_FOUND
        out = ~ins
        if np.any(out):
            h, _, _, _, qb, _ = _refine_exit_jac_generic(
                m, d, x[out], y[out], th[out], b[out], bd[out], dt, beta_c)
            bo = b[out]
            cr = bo * qb < 0.0
            if np.any(cr):
                tstar = t0 + h[cr] * bo[cr] / (bo[cr] - qb[cr])
                if np.any(tstar > t_min):
                    return _kernels.SCAN_ZERO_FOUND
            x, y, th, b, bd = xn[ins], yn[ins], tn[ins], bn[ins], bdn[ins]
        else:
            x, y, th, b, bd = xn, yn, tn, bn, bdn
    if x.size:
        return _kernels.SCAN_TRAPPED
    return _kernels.SCAN_CLEAN


def is_beta_free(m: IsothermalMetric, d: StarShapedDomain, beta_c: float,
                 dt: float = 5e-3, grid: tuple[int, int] = (256, 128),
                 max_steps: Optional[int] = None,
                 t_min: Optional[float] = None) -> bool:
    """True when no geodesic of the scan family develops a zero of the
    beta_c-scaled perpendicular solution before leaving the domain.

    The family starts from an influx grid of grid[0] boundary points times
    grid[1] incidence angles.  Raises NotApplicable if any scanned geodesic
    fails to exit within the step budget (the question needs every geodesic
    to leave).
    """
    validate_pair(m, d)
    if beta_c < 0:
        raise ValueError("beta_c must be nonnegative")
    if max_steps is None:
        max_steps = default_max_steps(d, dt)
    if t_min is None:
        t_min = 10.0 * dt
    g = build_influx_grid(grid[0], grid[1])
    bb, aa = g.mesh()
    xb, yb, nu = boundary_point_and_normal(d, bb.ravel())
    th0 = nu + aa.ravel()

    if _use_kernels(m, d, "auto"):
        status = _kernels.scan_perp_zeros(
            m.code, m.code_params, d.code, d.code_params,
            np.ascontiguousarray(xb), np.ascontiguousarray(yb),
            np.ascontiguousarray(th0), dt, max_steps, beta_c, t_min)
    else:
        status = _scan_generic(m, d, xb, yb, th0, dt, max_steps, beta_c,
                               t_min)
    if status == _kernels.SCAN_TRAPPED:
        raise NotApplicable(
            "zero scan hit a geodesic that never exits; the simplicity "
            "question is not applicable to a trapping pair")
    return status == _kernels.SCAN_CLEAN


def terminator(m: IsothermalMetric, d: StarShapedDomain, eps: float = 1e-3,
               beta_cap: float = 64.0, dt: float = 5e-3,
               grid: tuple[int, int] = (256, 128),
               max_steps: Optional[int] = None) -> float:
    """Largest curvature scaling that keeps every scanned geodesic free of
    perpendicular zeros, located by bisection to within eps.

    Returns beta_cap when even the cap is free.  A value above 1 certifies
    (at scan resolution) the absence of conjugate points for the true
    curvature; values below 1 quantify how strongly focusing the pair is.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if beta_cap <= 0:
        raise ValueError("beta_cap must be positive")
    if is_beta_free(m, d, beta_cap, dt=dt, grid=grid, max_steps=max_steps):
        return float(beta_cap)
    lo, hi = 1e-3, float(beta_cap)
    while hi - lo >= eps:
        mid = 0.5 * (lo + hi)
        if is_beta_free(m, d, mid, dt=dt, grid=grid, max_steps=max_steps):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)

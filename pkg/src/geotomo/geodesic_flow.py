"""Unit-speed geodesic tracing on the unit sphere bundle over a domain.

Rays live on the influx boundary: a boundary footpoint at polar angle beta and
an incidence angle alpha in (-pi/2, pi/2) measured from the inner normal, so
the initial direction is theta0 = nu(beta) + alpha.  Tracing marches the
reduced system

    x' = exp(-lam) cos theta,  y' = exp(-lam) sin theta,
    theta' = exp(-lam) (cos theta * lam_y - sin theta * lam_x)

with classical RK4 until the first sample outside the domain, then refines the
boundary crossing by bisection on the last step (20 iterations, one RK4
substep per probe).

Catalog metric/domain pairs run through the compiled kernels in _kernels;
closure-based ones take a slower vectorized numpy path with identical
semantics.  The batch_* helpers are the entry points used by the transform
and reconstruction modules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from . import _kernels
from .errors import GeometryInconsistency, TrappedGeodesic
from .geometry import (IsothermalMetric, StarShapedDomain,
                       boundary_point_and_normal, validate_pair,
                       wrap_pm_pi, wrap_two_pi)

HALF_PI = 0.5 * np.pi
# incidence angles are clamped into (-pi/2 + ALPHA_PAD, pi/2 - ALPHA_PAD);
# anything past pi/2 by more than ALPHA_SLACK means the trace is unusable
ALPHA_PAD = 1e-9
ALPHA_SLACK = 1e-3


class SMPoint(NamedTuple):
    """Point of the sphere bundle: position plus direction angle in [0, 2pi)."""
    x: float
    y: float
    theta: float


class InfluxCoord(NamedTuple):
    """Fan-beam coordinate on the influx boundary."""
    beta: float
    alpha: float


@dataclass
class GeodesicPath:
    """Uniform-dt trace of one geodesic.

    xs/ys/thetas hold the marched samples (sample 0 is the start; every sample
    except possibly the last lies inside the domain).  The exit state is the
    bisection-refined boundary crossing at time tau.
    """

    dt: float
    xs: np.ndarray
    ys: np.ndarray
    thetas: np.ndarray
    exit_x: float
    exit_y: float
    exit_theta: float
    tau: float

    @property
    def exit_point(self) -> Tuple[float, float]:
        return (self.exit_x, self.exit_y)

    @property
    def ts(self) -> np.ndarray:
        return self.dt * np.arange(len(self.xs))

    def samples(self) -> List[SMPoint]:
        return [SMPoint(float(x), float(y), float(t))
                for x, y, t in zip(self.xs, self.ys, self.thetas)]


def default_max_steps(d: StarShapedDomain, dt: float) -> int:
    """Step budget: enough for a path of metric length 8 * r_max."""
    return int(math.ceil(8.0 * d.r_max / dt))


def _as_1d(*vals):
    return [np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in vals]


def _use_kernels(m: IsothermalMetric, d: StarShapedDomain, engine: str) -> bool:
    if engine == "numba":
        if m.code < 0 or d.code < 0:
            raise ValueError("compiled engine needs catalog metric and domain")
        return True
    if engine == "numpy":
        return False
    return m.code >= 0 and d.code >= 0


# ---------------------------------------------------------------------------
# generic (closure-based) engine
# ---------------------------------------------------------------------------

def _rk4_generic(m, x, y, th, dt):
    def deriv(x, y, th):
        s = np.exp(-m.lam(x, y))
        gx, gy = m.grad_lam(x, y)
        c, sn = np.cos(th), np.sin(th)
        return s * c, s * sn, s * (c * gy - sn * gx)

    k1x, k1y, k1t = deriv(x, y, th)
    k2x, k2y, k2t = deriv(x + 0.5 * dt * k1x, y + 0.5 * dt * k1y, th + 0.5 * dt * k1t)
    k3x, k3y, k3t = deriv(x + 0.5 * dt * k2x, y + 0.5 * dt * k2y, th + 0.5 * dt * k2t)
    k4x, k4y, k4t = deriv(x + dt * k3x, y + dt * k3y, th + dt * k3t)
    sixth = dt / 6.0
    return (x + sixth * (k1x + 2.0 * (k2x + k3x) + k4x),
            y + sixth * (k1y + 2.0 * (k2y + k3y) + k4y),
            th + sixth * (k1t + 2.0 * (k2t + k3t) + k4t))


def _inside_arr(d: StarShapedDomain, x, y):
    rb = d.r(np.arctan2(y, x))
    return x * x + y * y <= rb * rb


def _refine_generic(m, d, x, y, th, dt):
    """Vectorized 20-iteration bisection from last-inside states."""
    lo = np.zeros_like(x)
    hi = np.full_like(x, dt)
    for _ in range(20):
        mid = 0.5 * (lo + hi)
        xm, ym, _ = _rk4_generic(m, x, y, th, mid)
        ins = _inside_arr(d, xm, ym)
        lo = np.where(ins, mid, lo)
        hi = np.where(ins, hi, mid)
    h = 0.5 * (lo + hi)
    xe, ye, te = _rk4_generic(m, x, y, th, h)
    return h, xe, ye, te


def _march_exit_generic(m, d, x0, y0, th0, dt, max_steps):
    n = x0.shape[0]
    xe = np.empty(n)
    ye = np.empty(n)
    the = np.empty(n)
    tau = np.full(n, np.nan)
    trapped = np.ones(n, dtype=bool)

    idx = np.arange(n)
    x, y, th = x0.copy(), y0.copy(), th0.copy()
    # last-inside states of rays that just stepped outside, for refinement
    ref_idx, ref_x, ref_y, ref_th, ref_step = [], [], [], [], []
    for step in range(1, max_steps + 1):
        if idx.size == 0:
            break
        xn, yn, tn = _rk4_generic(m, x, y, th, dt)
        ins = _inside_arr(d, xn, yn)
        out = ~ins
        if np.any(out):
            ref_idx.append(idx[out])
            ref_x.append(x[out])
            ref_y.append(y[out])
            ref_th.append(th[out])
            ref_step.append(np.full(out.sum(), step))
        idx, x, y, th = idx[ins], xn[ins], yn[ins], tn[ins]
    if idx.size:  # still inside: trapped; report last state
        xe[idx], ye[idx], the[idx] = x, y, th
    if ref_idx:
        ridx = np.concatenate(ref_idx)
        rx = np.concatenate(ref_x)
        ry = np.concatenate(ref_y)
        rth = np.concatenate(ref_th)
        rstep = np.concatenate(ref_step)
        h, qx, qy, qt = _refine_generic(m, d, rx, ry, rth, dt)
        xe[ridx], ye[ridx], the[ridx] = qx, qy, qt
        tau[ridx] = (rstep - 1) * dt + h
        trapped[ridx] = False
    return xe, ye, the, tau, trapped


def _march_emit_generic(m, d, x0, y0, th0, dt, max_steps, include_exit_sample):
    """Step-major emission of samples for quadrature on closure metrics.

    Returns (ray_idx, sx, sy, sth, trapped); sample ordering differs from the
    compiled engine but downstream reductions are per-ray sums.
    """
    n = x0.shape[0]
    trapped = np.ones(n, dtype=bool)
    idx = np.arange(n)
    x, y, th = x0.copy(), y0.copy(), th0.copy()
    acc_i = [idx.copy()]
    acc_x = [x.copy()]
    acc_y = [y.copy()]
    acc_t = [th.copy()]
    for _ in range(max_steps):
        if idx.size == 0:
            break
        x, y, th = _rk4_generic(m, x, y, th, dt)
        ins = _inside_arr(d, x, y)
        if include_exit_sample:
            acc_i.append(idx.copy())
            acc_x.append(x.copy())
            acc_y.append(y.copy())
            acc_t.append(th.copy())
        else:
            acc_i.append(idx[ins])
            acc_x.append(x[ins])
            acc_y.append(y[ins])
            acc_t.append(th[ins])
        trapped[idx[~ins]] = False
        idx, x, y, th = idx[ins], x[ins], y[ins], th[ins]
    return (np.concatenate(acc_i), np.concatenate(acc_x),
            np.concatenate(acc_y), np.concatenate(acc_t), trapped)


# ---------------------------------------------------------------------------
# batch entry points (used by transforms / reconstruction / diagnostics)
# ---------------------------------------------------------------------------

def batch_exit(m, d, x0, y0, th0, dt, max_steps=None, engine="auto"):
    """Refined exit states for a batch of rays.

    Returns (xe, ye, theta_e, tau, trapped) as arrays over rays.
    """
    validate_pair(m, d)
    x0, y0, th0 = _as_1d(x0, y0, th0)
    if max_steps is None:
        max_steps = default_max_steps(d, dt)
    if _use_kernels(m, d, engine):
        return _kernels.march_exit(m.code, m.code_params, d.code, d.code_params,
                                   x0, y0, th0, float(dt), int(max_steps))
    return _march_exit_generic(m, d, x0, y0, th0, float(dt), int(max_steps))


def batch_emit(m, d, x0, y0, th0, dt, max_steps=None, include_exit_sample=False,
               engine="auto"):
    """All marched samples of a batch, flattened, for quadrature.

    Returns (ray_idx, sx, sy, sth, trapped).  Per-ray sample order is
    engine-dependent; only per-ray reductions should rely on it.
    """
    validate_pair(m, d)
    x0, y0, th0 = _as_1d(x0, y0, th0)
    if max_steps is None:
        max_steps = default_max_steps(d, dt)
    if _use_kernels(m, d, engine):
        counts, _ = _kernels.march_count(
            m.code, m.code_params, d.code, d.code_params,
            x0, y0, th0, float(dt), int(max_steps), include_exit_sample)
        offsets = np.zeros(len(counts), dtype=np.int64)
        np.cumsum(counts[:-1], out=offsets[1:])
        total = int(counts.sum())
        sx = np.empty(total)
        sy = np.empty(total)
        sth = np.empty(total)
        _, _, _, _, trapped = _kernels.march_emit(
            m.code, m.code_params, d.code, d.code_params,
            x0, y0, th0, float(dt), int(max_steps), include_exit_sample,
            False, offsets, sx, sy, sth)
        ray_idx = np.repeat(np.arange(len(counts)), counts)
        return ray_idx, sx, sy, sth, trapped
    return _march_emit_generic(m, d, x0, y0, th0, float(dt), int(max_steps),
                               include_exit_sample)


def batch_basepoints(m, d, x, y, theta, dt, max_steps=None, engine="auto"):
    """Influx coordinates of the geodesics through interior bundle points.

    Traces backward (from theta + pi), maps the refined exit to (beta, alpha)
    with alpha measured from the inner normal at the exit footpoint, clamps
    alpha into the open influx range, and flags failures.

    Returns (beta, alpha, trapped, inconsistent).
    """
    x, y, theta = _as_1d(x, y, theta)
    xe, ye, the, _, trapped = batch_exit(m, d, x, y, theta + np.pi, dt,
                                         max_steps=max_steps, engine=engine)
    beta = wrap_two_pi(np.arctan2(ye, xe))
    _, _, nu = boundary_point_and_normal(d, beta)
    alpha = wrap_pm_pi(the + np.pi - nu)
    inconsistent = (np.abs(alpha) >= HALF_PI + ALPHA_SLACK) & ~trapped
    alpha = np.clip(alpha, -HALF_PI + ALPHA_PAD, HALF_PI - ALPHA_PAD)
    return beta, alpha, trapped, inconsistent


# ---------------------------------------------------------------------------
# per-ray public API
# ---------------------------------------------------------------------------

def _trace_single(m, d, x0, y0, th0, dt, max_steps):
    """One ray with full sample storage (outside sample included)."""
    if _use_kernels(m, d, "auto"):
        x0a, y0a, th0a = _as_1d(x0, y0, th0)
        counts, _ = _kernels.march_count(
            m.code, m.code_params, d.code, d.code_params,
            x0a, y0a, th0a, dt, max_steps, True)
        total = int(counts[0])
        sx = np.empty(total)
        sy = np.empty(total)
        sth = np.empty(total)
        xe, ye, the, tau, trapped = _kernels.march_emit(
            m.code, m.code_params, d.code, d.code_params,
            x0a, y0a, th0a, dt, max_steps, True, True,
            np.zeros(1, dtype=np.int64), sx, sy, sth)
        return sx, sy, sth, float(xe[0]), float(ye[0]), float(the[0]), \
            float(tau[0]), bool(trapped[0])

    # closure path: plain per-step loop
    xs, ys, ths = [float(x0)], [float(y0)], [float(th0)]
    x, y, th = float(x0), float(y0), float(th0)
    trapped = True
    xe = ye = the = tau = np.nan
    for step in range(1, max_steps + 1):
        xa, ya, ta = _as_1d(x, y, th)
        xn, yn, tn = _rk4_generic(m, xa, ya, ta, dt)
        xn, yn, tn = float(xn[0]), float(yn[0]), float(tn[0])
        xs.append(xn)
        ys.append(yn)
        ths.append(tn)
        if _inside_arr(d, np.asarray(xn), np.asarray(yn)):
            x, y, th = xn, yn, tn
        else:
            xa, ya, ta = _as_1d(x, y, th)
            h, qx, qy, qt = _refine_generic(m, d, xa, ya, ta, dt)
            xe, ye, the = float(qx[0]), float(qy[0]), float(qt[0])
            tau = (step - 1) * dt + float(h[0])
            trapped = False
            break
    if trapped:
        xe, ye, the = x, y, th
    return (np.asarray(xs), np.asarray(ys), np.asarray(ths),
            xe, ye, the, tau, trapped)


def _build_path(sx, sy, sth, xe, ye, the, tau, dt) -> GeodesicPath:
    return GeodesicPath(dt=dt, xs=sx, ys=sy, thetas=wrap_two_pi(sth),
                        exit_x=xe, exit_y=ye,
                        exit_theta=float(wrap_two_pi(the)), tau=tau)


def trace_from_influx(m: IsothermalMetric, d: StarShapedDomain,
                      beta: float, alpha: float, dt: float,
                      max_steps: Optional[int] = None) -> GeodesicPath:
    """Trace the geodesic entering at influx coordinate (beta, alpha).

    alpha must lie strictly inside (-pi/2, pi/2); the start direction is
    nu(beta) + alpha.  Raises TrappedGeodesic (with the partial path attached)
    if the ray is still inside after the step budget.
    """
    validate_pair(m, d)
    if not (-HALF_PI < alpha < HALF_PI):
        raise ValueError(f"incidence angle {alpha} outside (-pi/2, pi/2)")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if max_steps is None:
        max_steps = default_max_steps(d, dt)
    x0, y0, nu = boundary_point_and_normal(d, beta)
    th0 = nu + alpha
    sx, sy, sth, xe, ye, the, tau, trapped = _trace_single(
        m, d, x0, y0, th0, dt, max_steps)
    path = _build_path(sx, sy, sth, xe, ye, the, tau, dt)
    if trapped:
        raise TrappedGeodesic(
            f"ray from (beta={beta:.6g}, alpha={alpha:.6g}) still inside "
            f"after {max_steps} steps", path=path,
            where=InfluxCoord(float(beta), float(alpha)))
    return path


def trace_from_interior(m: IsothermalMetric, d: StarShapedDomain,
                        x: float, y: float, theta: float, dt: float,
                        mode: str = "forward",
                        max_steps: Optional[int] = None) -> GeodesicPath:
    """Trace from a strictly interior bundle point, forward or backward.

    Backward mode integrates the same system from (x, y, theta + pi) and
    reports that reversed ray's exit.
    """
    validate_pair(m, d)
    if mode not in ("forward", "backward"):
        raise ValueError(f"mode must be 'forward' or 'backward', got {mode!r}")
    rb = d.r(np.arctan2(y, x))
    if not x * x + y * y < rb * rb:
        raise ValueError(f"start ({x}, {y}) is not strictly inside the domain")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if max_steps is None:
        max_steps = default_max_steps(d, dt)
    th0 = theta + np.pi if mode == "backward" else theta
    sx, sy, sth, xe, ye, the, tau, trapped = _trace_single(
        m, d, float(x), float(y), float(th0), dt, max_steps)
    path = _build_path(sx, sy, sth, xe, ye, the, tau, dt)
    if trapped:
        raise TrappedGeodesic(
            f"{mode} ray from ({x:.6g}, {y:.6g}, theta={theta:.6g}) still "
            f"inside after {max_steps} steps", path=path,
            where=SMPoint(float(x), float(y), float(wrap_two_pi(theta))))
    return path


def basepoint(m: IsothermalMetric, d: StarShapedDomain,
              x: float, y: float, theta: float, dt: float,
              max_steps: Optional[int] = None) -> InfluxCoord:
    """Influx coordinate of the geodesic through interior point (x, y, theta).

    Traces backward to the entry crossing.  Raises TrappedGeodesic if the
    backward ray never leaves, GeometryInconsistency if the reconstructed
    incidence angle lands materially past +-pi/2.
    """
    rb = d.r(np.arctan2(y, x))
    if not x * x + y * y < rb * rb:
        raise ValueError(f"point ({x}, {y}) is not strictly inside the domain")
    beta, alpha, trapped, inconsistent = batch_basepoints(
        m, d, x, y, theta, dt, max_steps=max_steps)
    if trapped[0]:
        raise TrappedGeodesic(
            f"backward ray from ({x:.6g}, {y:.6g}, theta={theta:.6g}) "
            "exhausted its step budget",
            where=SMPoint(float(x), float(y), float(wrap_two_pi(theta))))
    if inconsistent[0]:
        raise GeometryInconsistency(
            f"influx angle for ({x:.6g}, {y:.6g}, theta={theta:.6g}) is "
            "past pi/2 beyond tolerance; trace unusable")
    return InfluxCoord(float(beta[0]), float(alpha[0]))

"""Compiled per-ray marching kernels for the catalog metrics/domains.

The unit-speed geodesic system in isothermal coordinates,

    x' = exp(-lam) cos(theta)
    y' = exp(-lam) sin(theta)
    theta' = exp(-lam) (-sin(theta) lam_x + cos(theta) lam_y),

is integrated with classical RK4 at a fixed step dt.  Marching stops at the
first sample outside the domain; the crossing is then refined by 20 bisection
iterations on the step fraction, each probe being a single RK4 substep from
the last inside state.  A scaled perpendicular-displacement equation
b'' + beta_c * kappa * b = 0 rides along as two extra components where needed.

Everything here is scalar per-ray code compiled with numba; the metric and
domain enter through small integer codes plus parameter vectors (see
geometry.py).  Generic closure-based metrics take the numpy path in
geodesic_flow instead.
"""

import math

import numpy as np
from numba import njit

# status codes returned by the conjugate-scan kernel
SCAN_CLEAN = 0
SCAN_ZERO_FOUND = 1
SCAN_TRAPPED = 2


@njit(cache=True, inline="always")
def _speed_grad(mc, mp, x, y):
    """exp(-lam) and grad(lam) for metric code mc with params mp."""
    if mc == 0:  # euclidean
        return 1.0, 0.0, 0.0
    elif mc == 1:  # const_pos, mp = [R^2]
        R2 = mp[0]
        u = x * x + y * y + R2
        return u / (2.0 * R2), -2.0 * x / u, -2.0 * y / u
    elif mc == 2:  # const_neg, mp = [R^2]
        R2 = mp[0]
        w = R2 - x * x - y * y
        return w / (2.0 * R2), 2.0 * x / w, 2.0 * y / w
    else:  # lens, mp = [k, 1/(2 sigma^2), cx, cy]
        k = mp[0]
        a = mp[1]
        dx = x - mp[2]
        dy = y - mp[3]
        e = math.exp(-a * (dx * dx + dy * dy))
        s = math.exp(-0.5 * k * e)
        com = -k * a * e
        return s, com * dx, com * dy


@njit(cache=True, inline="always")
def _kappa(mc, mp, x, y):
    """Gauss curvature -exp(-2 lam) * Lap(lam)."""
    if mc == 0:
        return 0.0
    elif mc == 1:
        return 1.0 / mp[0]
    elif mc == 2:
        return -1.0 / mp[0]
    else:
        k = mp[0]
        a = mp[1]
        dx = x - mp[2]
        dy = y - mp[3]
        s = dx * dx + dy * dy
        e = math.exp(-a * s)
        lap = k * a * e * (2.0 * a * s - 2.0)
        return -math.exp(-k * e) * lap


@njit(cache=True, inline="always")
def _inside(dc, dp, x, y):
    """Closed-domain test |x|^2 <= r(arg x)^2."""
    if dc == 0:  # circle, dp = [R]
        return x * x + y * y <= dp[0] * dp[0]
    elif dc == 1:  # ellipse, dp = [a, b]
        xa = x / dp[0]
        yb = y / dp[1]
        return xa * xa + yb * yb <= 1.0
    else:  # perturbed circle, dp = [a, b]
        beta = math.atan2(y, x)
        r = dp[0] + dp[1] * math.cos(4.0 * beta)
        return x * x + y * y <= r * r


@njit(cache=True, inline="always")
def _rk4(mc, mp, x, y, th, dt):
    s, gx, gy = _speed_grad(mc, mp, x, y)
    c = math.cos(th)
    sn = math.sin(th)
    k1x = s * c
    k1y = s * sn
    k1t = s * (c * gy - sn * gx)

    xa = x + 0.5 * dt * k1x
    ya = y + 0.5 * dt * k1y
    ta = th + 0.5 * dt * k1t
    s, gx, gy = _speed_grad(mc, mp, xa, ya)
    c = math.cos(ta)
    sn = math.sin(ta)
    k2x = s * c
    k2y = s * sn
    k2t = s * (c * gy - sn * gx)

    xa = x + 0.5 * dt * k2x
    ya = y + 0.5 * dt * k2y
    ta = th + 0.5 * dt * k2t
    s, gx, gy = _speed_grad(mc, mp, xa, ya)
    c = math.cos(ta)
    sn = math.sin(ta)
    k3x = s * c
    k3y = s * sn
    k3t = s * (c * gy - sn * gx)

    xa = x + dt * k3x
    ya = y + dt * k3y
    ta = th + dt * k3t
    s, gx, gy = _speed_grad(mc, mp, xa, ya)
    c = math.cos(ta)
    sn = math.sin(ta)
    k4x = s * c
    k4y = s * sn
    k4t = s * (c * gy - sn * gx)

    sixth = dt / 6.0
    return (x + sixth * (k1x + 2.0 * (k2x + k3x) + k4x),
            y + sixth * (k1y + 2.0 * (k2y + k3y) + k4y),
            th + sixth * (k1t + 2.0 * (k2t + k3t) + k4t))


@njit(cache=True, inline="always")
def _rk4_jac(mc, mp, x, y, th, b, bd, dt, beta_c):
    """RK4 step of the flow plus b'' = -beta_c * kappa * b."""
    s, gx, gy = _speed_grad(mc, mp, x, y)
    c = math.cos(th)
    sn = math.sin(th)
    k1x = s * c
    k1y = s * sn
    k1t = s * (c * gy - sn * gx)
    k1b = bd
    k1d = -beta_c * _kappa(mc, mp, x, y) * b

    xa = x + 0.5 * dt * k1x
    ya = y + 0.5 * dt * k1y
    ta = th + 0.5 * dt * k1t
    ba = b + 0.5 * dt * k1b
    da = bd + 0.5 * dt * k1d
    s, gx, gy = _speed_grad(mc, mp, xa, ya)
    c = math.cos(ta)
    sn = math.sin(ta)
    k2x = s * c
    k2y = s * sn
    k2t = s * (c * gy - sn * gx)
    k2b = da
    k2d = -beta_c * _kappa(mc, mp, xa, ya) * ba

    xa = x + 0.5 * dt * k2x
    ya = y + 0.5 * dt * k2y
    ta = th + 0.5 * dt * k2t
    ba = b + 0.5 * dt * k2b
    da = bd + 0.5 * dt * k2d
    s, gx, gy = _speed_grad(mc, mp, xa, ya)
    c = math.cos(ta)
    sn = math.sin(ta)
    k3x = s * c
    k3y = s * sn
    k3t = s * (c * gy - sn * gx)
    k3b = da
    k3d = -beta_c * _kappa(mc, mp, xa, ya) * ba

    xa = x + dt * k3x
    ya = y + dt * k3y
    ta = th + dt * k3t
    ba = b + dt * k3b
    da = bd + dt * k3d
    s, gx, gy = _speed_grad(mc, mp, xa, ya)
    c = math.cos(ta)
    sn = math.sin(ta)
    k4x = s * c
    k4y = s * sn
    k4t = s * (c * gy - sn * gx)
    k4b = da
    k4d = -beta_c * _kappa(mc, mp, xa, ya) * ba

    sixth = dt / 6.0
    return (x + sixth * (k1x + 2.0 * (k2x + k3x) + k4x),
            y + sixth * (k1y + 2.0 * (k2y + k3y) + k4y),
            th + sixth * (k1t + 2.0 * (k2t + k3t) + k4t),
            b + sixth * (k1b + 2.0 * (k2b + k3b) + k4b),
            bd + sixth * (k1d + 2.0 * (k2d + k3d) + k4d))


@njit(cache=True, inline="always")
def _bisect_exit(mc, mp, dc, dp, x, y, th, dt):
    """Step fraction h in [0, dt] putting the crossing within dt/2^21."""
    lo = 0.0
    hi = dt
    for _ in range(20):
        mid = 0.5 * (lo + hi)
        xm, ym, _ = _rk4(mc, mp, x, y, th, mid)
        if _inside(dc, dp, xm, ym):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@njit(cache=True, inline="always")
def _bisect_exit_jac(mc, mp, dc, dp, x, y, th, b, bd, dt, beta_c):
    lo = 0.0
    hi = dt
    for _ in range(20):
        mid = 0.5 * (lo + hi)
        xm, ym, _, _, _ = _rk4_jac(mc, mp, x, y, th, b, bd, mid, beta_c)
        if _inside(dc, dp, xm, ym):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@njit(cache=True, nogil=True)
def march_exit(mc, mp, dc, dp, x0, y0, th0, dt, max_steps):
    """March each ray to its first boundary crossing and refine it.

    The start sample is taken as inside unconditionally (influx starts sit on
    the boundary up to roundoff).  Returns refined exit states, exit times and
    a trapped flag for rays still inside after max_steps.
    """
    n = x0.shape[0]
    xe = np.empty(n)
    ye = np.empty(n)
    the = np.empty(n)
    tau = np.empty(n)
    trapped = np.zeros(n, np.bool_)
    for i in range(n):
        x = x0[i]
        y = y0[i]
        th = th0[i]
        done = False
        for step in range(1, max_steps + 1):
            xn, yn, tn = _rk4(mc, mp, x, y, th, dt)
            if _inside(dc, dp, xn, yn):
                x = xn
                y = yn
                th = tn
            else:
                h = _bisect_exit(mc, mp, dc, dp, x, y, th, dt)
                xq, yq, tq = _rk4(mc, mp, x, y, th, h)
                xe[i] = xq
                ye[i] = yq
                the[i] = tq
                tau[i] = (step - 1) * dt + h
                done = True
                break
        if not done:
            trapped[i] = True
            xe[i] = x
            ye[i] = y
            the[i] = th
            tau[i] = np.nan
    return xe, ye, the, tau, trapped


@njit(cache=True, nogil=True)
def march_count(mc, mp, dc, dp, x0, y0, th0, dt, max_steps, include_exit_sample):
    """Number of path samples each ray will emit (see march_emit)."""
    n = x0.shape[0]
    counts = np.empty(n, np.int64)
    trapped = np.zeros(n, np.bool_)
    for i in range(n):
        x = x0[i]
        y = y0[i]
        th = th0[i]
        cnt = 1
        done = False
        for _ in range(max_steps):
            x, y, th = _rk4(mc, mp, x, y, th, dt)
            if _inside(dc, dp, x, y):
                cnt += 1
            else:
                if include_exit_sample:
                    cnt += 1
                done = True
                break
        if not done:
            trapped[i] = True
        counts[i] = cnt
    return counts, trapped


@njit(cache=True, nogil=True)
def march_emit(mc, mp, dc, dp, x0, y0, th0, dt, max_steps,
               include_exit_sample, refine, offsets, out_x, out_y, out_th):
    """March and write the uniform-dt samples of each ray into flat buffers.

    Ray i occupies out_*[offsets[i] : offsets[i] + count_i] with count_i from
    march_count (same flags).  Sample 0 is the start; the first outside sample
    is included only when include_exit_sample.  With refine=True the crossing
    is bisected and exit arrays carry the refined state, otherwise they carry
    the raw first-outside state and tau = step*dt.
    """
    n = x0.shape[0]
    xe = np.empty(n)
    ye = np.empty(n)
    the = np.empty(n)
    tau = np.empty(n)
    trapped = np.zeros(n, np.bool_)
    for i in range(n):
        x = x0[i]
        y = y0[i]
        th = th0[i]
        pos = offsets[i]
        out_x[pos] = x
        out_y[pos] = y
        out_th[pos] = th
        pos += 1
        done = False
        for step in range(1, max_steps + 1):
            xn, yn, tn = _rk4(mc, mp, x, y, th, dt)
            if _inside(dc, dp, xn, yn):
                x = xn
                y = yn
                th = tn
                out_x[pos] = x
                out_y[pos] = y
                out_th[pos] = th
                pos += 1
            else:
                if include_exit_sample:
                    out_x[pos] = xn
                    out_y[pos] = yn
                    out_th[pos] = tn
                    pos += 1
                if refine:
                    h = _bisect_exit(mc, mp, dc, dp, x, y, th, dt)
                    xq, yq, tq = _rk4(mc, mp, x, y, th, h)
                    xe[i] = xq
                    ye[i] = yq
                    the[i] = tq
                    tau[i] = (step - 1) * dt + h
                else:
                    xe[i] = xn
                    ye[i] = yn
                    the[i] = tn
                    tau[i] = step * dt
                done = True
                break
        if not done:
            trapped[i] = True
            xe[i] = x
            ye[i] = y
            the[i] = th
            tau[i] = np.nan
    return xe, ye, the, tau, trapped


@njit(cache=True, nogil=True)
def scan_perp_zeros(mc, mp, dc, dp, x0, y0, th0, dt, max_steps, beta_c, t_min):
    """Look for a zero of the scaled perpendicular solution past t_min.

    b starts at (0, 1).  A sign change between consecutive samples (or between
    the last inside sample and the refined exit) counts when its linearly
    interpolated time exceeds t_min.  Early-exits on the first hit.

    Returns SCAN_ZERO_FOUND / SCAN_TRAPPED / SCAN_CLEAN.
    """
    n = x0.shape[0]
    for i in range(n):
        x = x0[i]
        y = y0[i]
        th = th0[i]
        b = 0.0
        bd = 1.0
        done = False
        for step in range(1, max_steps + 1):
            xn, yn, tn, bn, bdn = _rk4_jac(mc, mp, x, y, th, b, bd, dt, beta_c)
            if _inside(dc, dp, xn, yn):
                if b * bn < 0.0:
                    tstar = (step - 1) * dt + dt * b / (b - bn)
                    if tstar > t_min:
                        return SCAN_ZERO_FOUND
                x = xn
                y = yn
                th = tn
                b = bn
                bd = bdn
            else:
                h = _bisect_exit_jac(mc, mp, dc, dp, x, y, th, b, bd, dt, beta_c)
                _, _, _, bq, _ = _rk4_jac(mc, mp, x, y, th, b, bd, h, beta_c)
                if b * bq < 0.0:
                    tstar = (step - 1) * dt + h * b / (b - bq)
                    if tstar > t_min:
                        return SCAN_ZERO_FOUND
                done = True
                break
        if not done:
            return SCAN_TRAPPED
    return SCAN_CLEAN


@njit(cache=True, nogil=True)
def march_jacobi_collect(mc, mp, dc, dp, x0, y0, th0, dt, max_steps, beta_c,
                         out_x, out_y, out_th, out_b, out_bd):
    """Single-ray marching with the perpendicular solution stored per sample.

    Buffers must hold max_steps + 2 entries.  Returns
    (count, exit_x, exit_y, exit_th, exit_b, exit_bd, tau, trapped) where the
    exit state is bisection-refined.
    """
    x = x0
    y = y0
    th = th0
    b = 0.0
    bd = 1.0
    out_x[0] = x
    out_y[0] = y
    out_th[0] = th
    out_b[0] = b
    out_bd[0] = bd
    cnt = 1
    for step in range(1, max_steps + 1):
        xn, yn, tn, bn, bdn = _rk4_jac(mc, mp, x, y, th, b, bd, dt, beta_c)
        out_x[cnt] = xn
        out_y[cnt] = yn
        out_th[cnt] = tn
        out_b[cnt] = bn
        out_bd[cnt] = bdn
        cnt += 1
        if _inside(dc, dp, xn, yn):
            x = xn
            y = yn
            th = tn
            b = bn
            bd = bdn
        else:
            h = _bisect_exit_jac(mc, mp, dc, dp, x, y, th, b, bd, dt, beta_c)
            xq, yq, tq, bq, bdq = _rk4_jac(mc, mp, x, y, th, b, bd, h, beta_c)
            tau = (step - 1) * dt + h
            return cnt, xq, yq, tq, bq, bdq, tau, False
    return cnt, x, y, th, b, bd, np.nan, True

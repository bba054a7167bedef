"""Backprojection and Neumann-series reconstruction.

The reconstruction formulas recover a scalar field (route "frc") or the
stream function of a solenoidal field (route "hrc") from influx ray data that
has been antipodally completed and fiberwise Hilbert-transformed (see
fiber_harmonics.prep).  Both routes need, at every inside gridpoint x and
every direction theta_l, the influx coordinate of the geodesic through
(x, theta_l) — found by tracing backward to the boundary.  That basepoint
map is by far the dominant cost and is iteration-independent, so it is
computed once into a BasepointTable and reused.

With w denoting the prepped data sampled at the basepoint of (x, theta_l):

  frc:  u(x) = dtheta * sum_l w cos(theta_l),
        v(x) = dtheta * sum_l w sin(theta_l),
        result = e^{-2 lam}/(4 pi) * (-D_x(e^{lam} v) + D_y(e^{lam} u))

  hrc:  result = -(1/4 pi) * dtheta * sum_l w        (no differentiation)

The 4 pi combines the fiber average 1/(2 pi) with a factor 1/2 owed to the
parity completion: measured data vanish on outflux directions, so the odd
(resp. even) part of the full-fiber data equals half of the antipodal
extension that prep applies.  (Verified empirically: without the 1/2 the
flat-metric one-shot reconstructs exactly 2x the truth.)

On a simple manifold the one-shot result equals the truth up to a compact
error operator (exactly, when the curvature is constant); the Neumann driver
removes the error term iteratively:

    f_0 = A(D);  g_{k} = g_{k-1} - A(I(g_{k-1}));  f_k = f_{k-1} + g_k

where A = backprojection of prepped data and I is the matching forward
transform applied to the current grid through a bilinear sampler.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import TrappedGeodesic
from .fields import (FieldSampler, ScalarGrid, _domain_mask, grad_centered,
                     rel_l2)
from .fiber_harmonics import prep
from .geodesic_flow import batch_basepoints, default_max_steps
from .geometry import IsothermalMetric, StarShapedDomain, validate_pair
from .ray_transform import FanBeamData, forward_i0, forward_i1_xperp

TWO_PI = 2.0 * np.pi
FOUR_PI = 4.0 * np.pi

# chunk of theta columns processed per table/backprojection slice; fixed so
# accumulation order (hence floating-point output) never depends on threading
THETA_CHUNK = 32


@dataclass
class BasepointTable:
    """Influx coordinates of the geodesics through every inside gridpoint,
    for n_theta equispaced directions.

    beta/alpha/trapped have shape (n_inside, n_theta); row k belongs to the
    flat node index inside_idx[k] (x-major).  trapped covers both rays that
    never reached the boundary and rays whose exit was inconsistent with an
    influx coordinate; consumers treat them as missing data.
    """

    n: int
    r_max: float
    n_theta: int
    dt: float
    domain: StarShapedDomain
    metric_kind: str
    thetas: np.ndarray
    inside_idx: np.ndarray
    inside_mask: np.ndarray
    beta: np.ndarray
    alpha: np.ndarray
    trapped: np.ndarray

    @property
    def d_theta(self) -> float:
        return TWO_PI / self.n_theta

    def trapped_node_count(self) -> int:
        """Gridpoints with at least one unusable direction."""
        return int(np.count_nonzero(self.trapped.any(axis=1)))


def precompute_basepoints(m: IsothermalMetric, d: StarShapedDomain, n: int,
                          n_theta: Optional[int] = None,
                          dt: Optional[float] = None,
                          r_max: Optional[float] = None,
                          threads: int = 1) -> BasepointTable:
    """Trace every (inside gridpoint, direction) pair backward to the boundary.

    Defaults: n_theta = 2n, dt = 2*r_max/n (one grid cell per step).  Rays
    that fail to exit (or exit inconsistently) are marked trapped rather than
    raising; downstream angular sums skip them.
    """
    validate_pair(m, d)
    if n < 3:
        raise ValueError("grid needs n >= 3")
    r_max = float(d.r_max if r_max is None else r_max)
    if n_theta is None:
        n_theta = 2 * n
    if n_theta < 16 or n_theta % 4:
        raise ValueError("n_theta must be a multiple of 4, at least 16")
    if dt is None:
        dt = 2.0 * r_max / n
    if dt <= 0:
        raise ValueError("dt must be positive")
    max_steps = default_max_steps(d, dt)

    mask = _domain_mask(d, n, r_max)
    inside_idx = np.flatnonzero(mask.ravel())
    ax = np.linspace(-r_max, r_max, n)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    nx = X.ravel()[inside_idx]
    ny = Y.ravel()[inside_idx]
    k = inside_idx.size
    thetas = TWO_PI * np.arange(n_theta) / n_theta

    beta = np.empty((k, n_theta))
    alpha = np.empty((k, n_theta))
    trapped = np.empty((k, n_theta), dtype=bool)

    def do_column(l: int) -> None:
        th = np.full(k, thetas[l])
        b, a, tr, inc = batch_basepoints(m, d, nx, ny, th, dt,
                                         max_steps=max_steps)
        beta[:, l] = b
        alpha[:, l] = a
        trapped[:, l] = tr | inc

    if threads <= 1 or n_theta == 1:
        for l in range(n_theta):
            do_column(l)
    else:
        def run(block):
            for l in block:
                do_column(l)
        blocks = [range(s, min(s + THETA_CHUNK, n_theta))
                  for s in range(0, n_theta, THETA_CHUNK)]
        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(run, blocks))

    return BasepointTable(n=n, r_max=r_max, n_theta=n_theta, dt=float(dt),
                          domain=d, metric_kind=m.kind, thetas=thetas,
                          inside_idx=inside_idx, inside_mask=mask,
                          beta=beta, alpha=alpha, trapped=trapped)


def _angular_moments(prepped: FanBeamData, table: BasepointTable,
                     want_uv: bool):
    """Fixed-order chunked angular sums of the prepped data at basepoints.

    Returns (u, v) when want_uv (cos/sin weighted) else the plain sum, as
    length-n_inside vectors scaled by d_theta.
    """
    from .ray_transform import sample_fanbeam

    k = table.inside_idx.size
    if want_uv:
        u = np.zeros(k)
        v = np.zeros(k)
    else:
        s = np.zeros(k)
    for l0 in range(0, table.n_theta, THETA_CHUNK):
        l1 = min(l0 + THETA_CHUNK, table.n_theta)
        w = sample_fanbeam(prepped, table.beta[:, l0:l1],
                           table.alpha[:, l0:l1])
        w[table.trapped[:, l0:l1]] = 0.0
        if want_uv:
            u += w @ np.cos(table.thetas[l0:l1])
            v += w @ np.sin(table.thetas[l0:l1])
        else:
            s += w.sum(axis=1)
    if want_uv:
        return u * table.d_theta, v * table.d_theta
    return s * table.d_theta


def _scatter(table: BasepointTable, vec: np.ndarray) -> np.ndarray:
    flat = np.zeros(table.n * table.n)
    flat[table.inside_idx] = vec
    return flat.reshape(table.n, table.n)


def _check_pair(prepped: FanBeamData, table: BasepointTable) -> None:
    if prepped.values.shape != (prepped.grid.n_beta, prepped.grid.n_alpha):
        raise ValueError("malformed fan-beam data")
    if table.inside_idx.size == 0:
        raise ValueError("basepoint table covers no inside gridpoints")


def backproject_frc(prepped: FanBeamData, table: BasepointTable,
                    m: IsothermalMetric, d: StarShapedDomain) -> ScalarGrid:
    """Scalar-route backprojection of prepped (odd-extended, Hilbert
    transformed) ray-transform data.  Returns the one-shot reconstruction."""
    _check_pair(prepped, table)
    if d.kind != table.domain.kind or d.params != table.domain.params:
        raise ValueError("table was built for a different domain")
    u, v = _angular_moments(prepped, table, want_uv=True)

    ax = np.linspace(-table.r_max, table.r_max, table.n)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    lam = np.asarray(m.lam(X, Y), dtype=np.float64)
    elam = np.exp(lam)

    gu = ScalarGrid(table.n, table.r_max, _scatter(table, u) * elam,
                    table.domain, table.inside_mask)
    gv = ScalarGrid(table.n, table.r_max, _scatter(table, v) * elam,
                    table.domain, table.inside_mask)
    dvx, _ = grad_centered(gv)
    _, duy = grad_centered(gu)
    vals = np.where(table.inside_mask,
                    np.exp(-2.0 * lam) / FOUR_PI * (duy - dvx), 0.0)
    return ScalarGrid(table.n, table.r_max, vals, table.domain,
                      table.inside_mask)


def backproject_hrc(prepped: FanBeamData,
                    table: BasepointTable) -> ScalarGrid:
    """Stream-function-route backprojection (plain angular sum, no
    differentiation): -(1/4 pi) * dtheta * sum_l w at the basepoints."""
    _check_pair(prepped, table)
    s = _angular_moments(prepped, table, want_uv=False)
    vals = _scatter(table, -s / FOUR_PI)
    return ScalarGrid(table.n, table.r_max, vals, table.domain,
                      table.inside_mask)


@dataclass
class ReconstructionReport:
    """Result of a (possibly zero-iteration) Neumann-series reconstruction.

    per_iteration_field_error[k] is the relative L2 error of iterate k
    against the supplied truth (None entries when no truth was given);
    per_iteration_data_error[k] compares the re-computed forward data of
    iterate k with the input data.  Both have length iterations+1 unless the
    run aborted on a trapped geodesic (aborted=True, lists truncated).
    """

    result: ScalarGrid
    per_iteration_field_error: list = field(default_factory=list)
    per_iteration_data_error: list = field(default_factory=list)
    trapped_nodes: int = 0
    aborted: bool = False


def _rel_l2_flat(a: np.ndarray, b: np.ndarray) -> float:
    den = float(np.sqrt(np.sum(b * b)))
    num = float(np.sqrt(np.sum((a - b) ** 2)))
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


def neumann_invert(data: FanBeamData, formula: str, iterations: int,
                   m: IsothermalMetric, d: StarShapedDomain,
                   table: BasepointTable, dt: Optional[float] = None,
                   truth: Optional[ScalarGrid] = None,
                   max_steps: Optional[int] = None,
                   threads: int = 1) -> ReconstructionReport:
    """Partial Neumann sum correcting the one-shot backprojection.

    formula "frc" reconstructs a scalar field from its ray transform;
    "hrc" reconstructs the stream function of a solenoidal field from the
    transform of that field.  Iteration 0 is the bare backprojection.  A
    trapped geodesic met while re-applying the forward transform aborts the
    refinement and returns the report accumulated so far.
    """
    if formula not in ("frc", "hrc"):
        raise ValueError(f"formula must be 'frc' or 'hrc', got {formula!r}")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    if dt is None:
        dt = table.dt

    def apply_a(fan: FanBeamData) -> ScalarGrid:
        p = prep(fan, formula)
        if formula == "frc":
            return backproject_frc(p, table, m, d)
        return backproject_hrc(p, table)

    def apply_i(g: ScalarGrid) -> FanBeamData:
        sampler = FieldSampler(d, g)
        if formula == "frc":
            return forward_i0(m, d, sampler, data.grid, dt,
                              max_steps=max_steps, threads=threads)
        return forward_i1_xperp(m, d, sampler, data.grid, dt,
                                max_steps=max_steps, threads=threads)

    report = ReconstructionReport(result=None,
                                  trapped_nodes=table.trapped_node_count())

    f = apply_a(data)
    report.result = f

    def record(cur: ScalarGrid) -> None:
        report.per_iteration_field_error.append(
            rel_l2(cur, truth) if truth is not None else None)
        report.per_iteration_data_error.append(
            _rel_l2_flat(apply_i(cur).values, data.values))

    try:
        record(f)
        g = f
        for _ in range(iterations):
            g = g.with_values(g.values - apply_a(apply_i(g)).values)
            f = f.with_values(f.values + g.values)
            report.result = f
            record(f)
    except TrappedGeodesic:
        report.aborted = True
    return report

"""Scalar fields on square node grids over a star-shaped domain.

A ScalarGrid holds f(x_i, y_j) at the (n x n) corner nodes of the square
[-r_max, r_max]^2, spacing h = 2 r_max / (n - 1), with value 0 at every node
outside the domain.  values[i, j] is indexed x-first: x_i = -r_max + i*h,
y_j = -r_max + j*h.

This module also owns the field samplers used by the ray transforms (analytic
closure or bilinear grid lookup, both clipped to 0 outside the domain), the
masked finite-difference gradient, relative L2 error, the test phantoms, and
the grid CSV / PGM writers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .geometry import StarShapedDomain, inside


@dataclass
class ScalarGrid:
    """n x n nodal samples over [-r_max, r_max]^2, zero outside the domain."""

    n: int
    r_max: float
    values: np.ndarray          # shape (n, n), values[i, j] = f(x_i, y_j)
    domain: StarShapedDomain
    inside_mask: np.ndarray     # shape (n, n), bool

    @property
    def h(self) -> float:
        return 2.0 * self.r_max / (self.n - 1)

    def coords(self) -> Tuple[np.ndarray, np.ndarray]:
        ax = np.linspace(-self.r_max, self.r_max, self.n)
        return ax, ax.copy()

    def meshgrid(self) -> Tuple[np.ndarray, np.ndarray]:
        ax, ay = self.coords()
        return np.meshgrid(ax, ay, indexing="ij")

    def with_values(self, values: np.ndarray) -> "ScalarGrid":
        """Same geometry, new node values (masked to the domain)."""
        v = np.where(self.inside_mask, np.asarray(values, dtype=np.float64), 0.0)
        return ScalarGrid(self.n, self.r_max, v, self.domain, self.inside_mask)


def _domain_mask(domain: StarShapedDomain, n: int, r_max: float) -> np.ndarray:
    ax = np.linspace(-r_max, r_max, n)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    return inside(domain, X, Y)


def grid_from_function(fn: Callable, domain: StarShapedDomain, n: int,
                       r_max: Optional[float] = None) -> ScalarGrid:
    """Render a vectorized closure onto a fresh grid (masked to the domain)."""
    if n < 2:
        raise ValueError("grid needs n >= 2")
    r_max = float(domain.r_max if r_max is None else r_max)
    mask = _domain_mask(domain, n, r_max)
    ax = np.linspace(-r_max, r_max, n)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    vals = np.where(mask, fn(X, Y), 0.0)
    return ScalarGrid(n, r_max, vals, domain, mask)


def zero_grid(domain: StarShapedDomain, n: int,
              r_max: Optional[float] = None) -> ScalarGrid:
    return grid_from_function(lambda x, y: np.zeros_like(x), domain, n, r_max)


def sample_bilinear(g: ScalarGrid, x, y):
    """Bilinear interpolation of the grid; 0 outside the square or the domain."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    h = g.h
    fx = (x + g.r_max) / h
    fy = (y + g.r_max) / h
    ok = (fx >= 0) & (fx <= g.n - 1) & (fy >= 0) & (fy <= g.n - 1)
    fx = np.clip(fx, 0.0, g.n - 1.0)
    fy = np.clip(fy, 0.0, g.n - 1.0)
    i0 = np.minimum(fx.astype(np.int64), g.n - 2)
    j0 = np.minimum(fy.astype(np.int64), g.n - 2)
    wx = fx - i0
    wy = fy - j0
    v = g.values
    out = ((1 - wx) * (1 - wy) * v[i0, j0]
           + wx * (1 - wy) * v[i0 + 1, j0]
           + (1 - wx) * wy * v[i0, j0 + 1]
           + wx * wy * v[i0 + 1, j0 + 1])
    ok &= inside(g.domain, x, y)
    return np.where(ok, out, 0.0)


class FieldSampler:
    """Domain-clipped point evaluator: analytic closure or grid lookup.

    Calling it returns f(x, y) where (x, y) is in the domain and 0 elsewhere,
    vectorized.
    """

    def __init__(self, domain: StarShapedDomain,
                 source: Union[Callable, ScalarGrid]):
        self.domain = domain
        self.source = source
        if isinstance(source, ScalarGrid):
            self._eval = lambda x, y: sample_bilinear(source, x, y)
        else:
            self._eval = lambda x, y: np.where(
                inside(domain, x, y), source(x, y), 0.0)

    def __call__(self, x, y):
        return self._eval(np.asarray(x, dtype=np.float64),
                          np.asarray(y, dtype=np.float64))


def grad_centered(g: ScalarGrid) -> Tuple[np.ndarray, np.ndarray]:
    """Masked finite-difference gradient on the grid nodes.

    Centered differences where both axis neighbors are inside the domain,
    one-sided where exactly one is, 0 where neither is or the node itself is
    outside.
    """
    n = g.n
    h = g.h
    v = g.values
    m = g.inside_mask

    vp = np.zeros((n + 2, n + 2))
    vp[1:-1, 1:-1] = v
    mp = np.zeros((n + 2, n + 2), dtype=bool)
    mp[1:-1, 1:-1] = m

    out = []
    for axis in (0, 1):
        if axis == 0:
            vplus, vminus = vp[2:, 1:-1], vp[:-2, 1:-1]
            mplus, mminus = mp[2:, 1:-1], mp[:-2, 1:-1]
        else:
            vplus, vminus = vp[1:-1, 2:], vp[1:-1, :-2]
            mplus, mminus = mp[1:-1, 2:], mp[1:-1, :-2]
        centered = (vplus - vminus) / (2.0 * h)
        fwd = (vplus - v) / h
        bwd = (v - vminus) / h
        grad = np.where(mplus & mminus, centered,
                        np.where(mplus, fwd, np.where(mminus, bwd, 0.0)))
        out.append(np.where(m, grad, 0.0))
    return out[0], out[1]


def rel_l2(a: Union[ScalarGrid, np.ndarray], b: Union[ScalarGrid, np.ndarray],
           mask: Optional[np.ndarray] = None) -> float:
    """Relative L2 distance over inside nodes: ||a - b|| / ||b||."""
    if isinstance(a, ScalarGrid):
        if mask is None:
            mask = a.inside_mask
        a = a.values
    if isinstance(b, ScalarGrid):
        if mask is None:
            mask = b.inside_mask
        b = b.values
    if mask is None:
        mask = np.ones(np.shape(a), dtype=bool)
    num = float(np.sqrt(np.sum((a[mask] - b[mask]) ** 2)))
    den = float(np.sqrt(np.sum(b[mask] ** 2)))
    if den == 0.0:
        return 0.0 if num == 0.0 else np.inf
    return num / den


# ---------------------------------------------------------------------------
# phantoms
# ---------------------------------------------------------------------------

# (cx, cy, size, amplitude); size is the Gaussian sigma or the disc radius
Feature = Tuple[float, float, float, float]

_SMOOTH_DEFAULT: List[Feature] = [
    (0.45 * np.cos(a), 0.45 * np.sin(a), 0.15, amp)
    for a, amp in zip(np.deg2rad([90.0, 210.0, 330.0]), (1.0, 0.8, 0.6))
]

_DISC_DEFAULT: List[Feature] = [
    (-0.35, -0.15, 0.30, 1.0),
    (0.40, 0.25, 0.15, 0.8),
    (0.20, -0.45, 0.10, 0.6),
    (-0.25, 0.45, 0.10, 0.9),
]


def _random_features(kind: str, domain: StarShapedDomain,
                     rng: np.random.Generator, count: int) -> List[Feature]:
    feats = []
    base = _SMOOTH_DEFAULT if kind == "smooth_bumps" else _DISC_DEFAULT
    for i in range(count):
        ang = rng.uniform(0.0, 2.0 * np.pi)
        rad = rng.uniform(0.0, 0.6) * domain.r_max
        size = base[i % len(base)][2]
        amp = base[i % len(base)][3]
        feats.append((rad * np.cos(ang), rad * np.sin(ang), size, amp))
    return feats


def make_phantom(kind: str, domain: StarShapedDomain, n: int,
                 features: Optional[Sequence[Feature]] = None,
                 rng: Optional[np.random.Generator] = None,
                 r_max: Optional[float] = None
                 ) -> Tuple[ScalarGrid, FieldSampler]:
    """Build a test phantom as a matched (grid rendering, analytic sampler) pair.

    kind "smooth_bumps": sum of Gaussians (default: three bumps of sigma 0.15
    at radius 0.45, amplitudes 1 / 0.8 / 0.6).  kind "disc_pack": sum of
    indicator discs (default radii 0.3 / 0.15 / 0.1 / 0.1).  Pass `features`
    for explicit placement or `rng` to place features at random inside the
    domain.  Features falling entirely outside the domain are kept but warned
    about.
    """
    if kind not in ("smooth_bumps", "disc_pack"):
        raise ValueError(f"unknown phantom kind: {kind!r}")
    if features is None:
        if rng is not None:
            features = _random_features(
                kind, domain, rng,
                3 if kind == "smooth_bumps" else 4)
        else:
            features = _SMOOTH_DEFAULT if kind == "smooth_bumps" else _DISC_DEFAULT
    feats = [tuple(map(float, f)) for f in features]

    for cx, cy, size, _ in feats:
        rb = domain.r(np.arctan2(cy, cx))
        if np.hypot(cx, cy) - size > rb:
            warnings.warn(
                f"{kind} feature at ({cx:.3g}, {cy:.3g}) lies entirely "
                "outside the domain; keeping it anyway")

    if kind == "smooth_bumps":
        def fn(x, y):
            acc = np.zeros(np.broadcast(x, y).shape)
            for cx, cy, sig, amp in feats:
                acc = acc + amp * np.exp(
                    -((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * sig * sig))
            return acc
    else:
        def fn(x, y):
            acc = np.zeros(np.broadcast(x, y).shape)
            for cx, cy, rho, amp in feats:
                acc = acc + amp * (((x - cx) ** 2 + (y - cy) ** 2) < rho * rho)
            return acc

    grid = grid_from_function(fn, domain, n, r_max)
    return grid, FieldSampler(domain, fn)


# ---------------------------------------------------------------------------
# on-disk formats
# ---------------------------------------------------------------------------

GRID_HEADER = "# geotomo grid v1"


def write_grid_csv(g: ScalarGrid, path: str) -> None:
    """Nodal CSV: header, `n=<n>,r_max=<r>`, then rows i,j,x,y,value."""
    ax, ay = g.coords()
    with open(path, "w") as fh:
        fh.write(GRID_HEADER + "\n")
        fh.write(f"n={g.n},r_max={g.r_max:.17g}\n")
        for i in range(g.n):
            xi = ax[i]
            for j in range(g.n):
                fh.write(f"{i},{j},{xi:.17g},{ay[j]:.17g},"
                         f"{g.values[i, j]:.17g}\n")


def read_grid_csv(path: str, domain: StarShapedDomain) -> ScalarGrid:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != GRID_HEADER:
            raise ValueError(f"{path}: not a grid CSV (header {header!r})")
        meta = dict(kv.split("=") for kv in fh.readline().strip().split(","))
        n = int(meta["n"])
        r_max = float(meta["r_max"])
        values = np.zeros((n, n))
        for line in fh:
            parts = line.split(",")
            values[int(parts[0]), int(parts[1])] = float(parts[4])
    mask = _domain_mask(domain, n, r_max)
    return ScalarGrid(n, r_max, np.where(mask, values, 0.0), domain, mask)


def write_pgm(values: Union[ScalarGrid, np.ndarray], path: str) -> None:
    """8-bit ASCII PGM (P2), min-max scaled; rows run top-down in y."""
    if isinstance(values, ScalarGrid):
        values = values.values
    v = np.asarray(values, dtype=np.float64)
    lo = float(v.min())
    hi = float(v.max())
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    pix = np.rint((v - lo) * scale).astype(np.int64)
    with open(path, "w") as fh:
        fh.write("P2\n")
        fh.write(f"{v.shape[0]} {v.shape[1]}\n255\n")
        # image rows top-down: j from n-1 to 0, i left-right
        for j in range(v.shape[1] - 1, -1, -1):
            fh.write(" ".join(str(int(p)) for p in pix[:, j]) + "\n")

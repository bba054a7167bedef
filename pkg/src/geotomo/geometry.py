"""Conformally Euclidean metrics and star-shaped computational domains.

The metrics handled by this package are isotropic: g = exp(2*lam(x,y)) * delta
on a bounded domain of the plane, so a single scalar conformal factor lam and
its first two derivatives determine everything (sound speed c = exp(-lam),
Gauss curvature kappa = -exp(-2*lam) * (lam_xx + lam_yy)).

Domains are star-shaped with respect to the origin and described by a boundary
radius function r(beta), beta in [0, 2*pi).  Both metrics and domains come
from small catalogs of closed-form entries so that derivatives are analytic;
a generic radial-speed metric is available for everything else.

All closures are vectorized over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np

# Catalog codes consumed by the compiled flow kernels.  Negative code means
# "no closed form available, use the generic engine".
METRIC_EUCLIDEAN = 0
METRIC_CONST_POS = 1
METRIC_CONST_NEG = 2
METRIC_LENS = 3
METRIC_CUSTOM = -1

DOMAIN_CIRCLE = 0
DOMAIN_ELLIPSE = 1
DOMAIN_PERTURBED = 2
DOMAIN_CUSTOM = -1

TWO_PI = 2.0 * np.pi


def wrap_two_pi(angle):
    """Wrap angle(s) into [0, 2*pi)."""
    return np.mod(angle, TWO_PI)


def wrap_pm_pi(angle):
    """Wrap angle(s) into [-pi, pi)."""
    return np.mod(angle + np.pi, TWO_PI) - np.pi


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IsothermalMetric:
    """Isotropic metric g = exp(2*lam) * delta given by analytic closures.

    Attributes
    ----------
    kind : str
        Catalog tag ("euclidean", "const_pos", "const_neg", "lens", "radial").
    lam, grad_lam, lap_lam : callables
        Conformal exponent, its gradient (returned as a pair of arrays) and
        its Euclidean Laplacian.  Vectorized.
    is_radial : bool
        True when lam depends on |x| only (about the origin).
    singular_radius : float or None
        Radius at which the closure blows up (const_neg), else None.
    code, code_params
        Dispatch data for the compiled kernels.
    """

    kind: str
    params: dict
    lam: Callable
    grad_lam: Callable
    lap_lam: Callable
    is_radial: bool
    singular_radius: Optional[float] = None
    code: int = METRIC_CUSTOM
    code_params: np.ndarray = field(default_factory=lambda: np.zeros(1))


class MetricValues(NamedTuple):
    lam: float
    grad_lam: Tuple[float, float]
    lap_lam: float
    kappa: float


def euclidean_metric() -> IsothermalMetric:
    """Flat metric, lam identically zero."""
    zero = lambda x, y: np.zeros(np.broadcast(x, y).shape)
    return IsothermalMetric(
        kind="euclidean",
        params={},
        lam=zero,
        grad_lam=lambda x, y: (np.zeros(np.broadcast(x, y).shape),) * 2,
        lap_lam=zero,
        is_radial=True,
        code=METRIC_EUCLIDEAN,
        code_params=np.zeros(1),
    )


def const_pos_metric(R: float) -> IsothermalMetric:
    """Constant curvature +1/R**2: g = 4 R^4 / (|x|^2 + R^2)^2.

    The whole plane maps to a sphere of radius R with the equator on the
    circle |x| = R; domains must stay inside that circle to avoid trapped
    boundary-parallel geodesics when they hug the equator.
    """
    if R <= 0:
        raise ValueError("const_pos radius must be positive")
    R2 = R * R

    def lam(x, y):
        return np.log(2.0 * R2) - np.log(x * x + y * y + R2)

    def grad_lam(x, y):
        u = x * x + y * y + R2
        return -2.0 * x / u, -2.0 * y / u

    def lap_lam(x, y):
        u = x * x + y * y + R2
        return -4.0 * R2 / (u * u)

    return IsothermalMetric(
        kind="const_pos",
        params={"R": float(R)},
        lam=lam,
        grad_lam=grad_lam,
        lap_lam=lap_lam,
        is_radial=True,
        code=METRIC_CONST_POS,
        code_params=np.array([R2]),
    )


def const_neg_metric(R: float) -> IsothermalMetric:
    """Constant curvature -1/R**2: g = 4 R^4 / (|x|^2 - R^2)^2.

    Singular on the circle |x| = R (the ideal boundary of the disk model);
    computational domains must satisfy r_max < R.
    """
    if R <= 0:
        raise ValueError("const_neg radius must be positive")
    R2 = R * R

    def lam(x, y):
        return np.log(2.0 * R2) - np.log(R2 - (x * x + y * y))

    def grad_lam(x, y):
        w = R2 - (x * x + y * y)
        return 2.0 * x / w, 2.0 * y / w

    def lap_lam(x, y):
        w = R2 - (x * x + y * y)
        return 4.0 * R2 / (w * w)

    return IsothermalMetric(
        kind="const_neg",
        params={"R": float(R)},
        lam=lam,
        grad_lam=grad_lam,
        lap_lam=lap_lam,
        is_radial=True,
        singular_radius=float(R),
        code=METRIC_CONST_NEG,
        code_params=np.array([R2]),
    )


def lens_metric(k: float, sigma: float = 0.25,
                center: Tuple[float, float] = (0.2, 0.0)) -> IsothermalMetric:
    """Gaussian low-velocity bump: lam = (k/2) * exp(-|x - center|^2 / (2 sigma^2)).

    Sound speed exp(-lam) < 1 near the center, i.e. a focusing lens.  For the
    centered family the Herglotz condition d/dr (r/c) > 0 holds exactly for
    k < e and fails at k = e, where the circle r = sqrt(2)*sigma turns into a
    trapped ray.  Strength k around 0.5 is where conjugate points first enter
    a unit disk; see the terminator diagnostics.
    """
    if sigma <= 0:
        raise ValueError("lens sigma must be positive")
    cx, cy = float(center[0]), float(center[1])
    a = 1.0 / (2.0 * sigma * sigma)
    k = float(k)

    def bump(x, y):
        dx = x - cx
        dy = y - cy
        return np.exp(-a * (dx * dx + dy * dy))

    def lam(x, y):
        return 0.5 * k * bump(x, y)

    def grad_lam(x, y):
        dx = x - cx
        dy = y - cy
        e = np.exp(-a * (dx * dx + dy * dy))
        common = -k * a * e
        return common * dx, common * dy

    def lap_lam(x, y):
        dx = x - cx
        dy = y - cy
        s = dx * dx + dy * dy
        e = np.exp(-a * s)
        # Laplacian of (k/2) e^{-a s}: k a e (a s - 1) * 2 ... worked out:
        # d2/dx2 = k a e (2 a dx^2 - 1), sum over x,y:
        return k * a * e * (2.0 * a * s - 2.0)

    return IsothermalMetric(
        kind="lens",
        params={"k": k, "sigma": float(sigma), "center": (cx, cy)},
        lam=lam,
        grad_lam=grad_lam,
        lap_lam=lap_lam,
        is_radial=(cx == 0.0 and cy == 0.0),
        code=METRIC_LENS,
        code_params=np.array([k, a, cx, cy]),
    )


def radial_metric(c: Callable, dc: Callable, d2c: Callable,
                  name: str = "radial") -> IsothermalMetric:
    """Metric from a radial sound speed c(r) > 0 (vectorized closures).

    lam = -log c(|x|).  The speed derivatives dc, d2c are used for the
    analytic gradient/Laplacian; c must be smooth at r = 0 with c'(0) = 0 for
    the on-axis limits below to be correct.
    """

    def lam(x, y):
        r = np.hypot(x, y)
        return -np.log(c(r))

    def _lp(r):
        # d(lam)/dr and its r-derivative
        cr = c(r)
        lp = -dc(r) / cr
        lpp = -d2c(r) / cr + (dc(r) / cr) ** 2
        return lp, lpp

    def grad_lam(x, y):
        r = np.hypot(x, y)
        r_safe = np.where(r > 0, r, 1.0)
        lp, _ = _lp(r)
        gx = np.where(r > 0, lp * x / r_safe, 0.0)
        gy = np.where(r > 0, lp * y / r_safe, 0.0)
        return gx, gy

    def lap_lam(x, y):
        r = np.hypot(x, y)
        r_safe = np.where(r > 0, r, 1.0)
        lp, lpp = _lp(r)
        # polar Laplacian lam'' + lam'/r; at r=0 the limit is 2*lam''(0)
        return np.where(r > 0, lpp + lp / r_safe, 2.0 * lpp)

    return IsothermalMetric(
        kind=name,
        params={},
        lam=lam,
        grad_lam=grad_lam,
        lap_lam=lap_lam,
        is_radial=True,
        code=METRIC_CUSTOM,
    )


def make_metric(kind: str, **params) -> IsothermalMetric:
    """Catalog factory used by the CLI config path."""
    if kind == "euclidean":
        return euclidean_metric()
    if kind == "const_pos":
        return const_pos_metric(params["R"])
    if kind == "const_neg":
        return const_neg_metric(params["R"])
    if kind == "lens":
        return lens_metric(
            params["k"],
            params.get("sigma", 0.25),
            params.get("center", (0.2, 0.0)),
        )
    raise ValueError(f"unknown metric kind: {kind!r}")


def gaussian_curvature(m: IsothermalMetric, x, y):
    """kappa = -exp(-2 lam) * Laplacian(lam), vectorized."""
    return -np.exp(-2.0 * m.lam(x, y)) * m.lap_lam(x, y)


def eval_metric(m: IsothermalMetric, x: float, y: float) -> MetricValues:
    """Evaluate lam, grad lam, Laplacian lam and curvature at one point.

    Raises ValueError on the const_neg singularity circle |x| >= R.
    """
    if m.singular_radius is not None:
        if x * x + y * y >= m.singular_radius ** 2:
            raise ValueError(
                f"metric {m.kind} is singular at |x| >= {m.singular_radius}"
            )
    gx, gy = m.grad_lam(x, y)
    lap = m.lap_lam(x, y)
    lam = m.lam(x, y)
    kappa = -np.exp(-2.0 * lam) * lap
    return MetricValues(float(lam), (float(gx), float(gy)), float(lap), float(kappa))


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StarShapedDomain:
    """Domain star-shaped about the origin with boundary radius r(beta).

    r and dr are 2*pi-periodic vectorized closures; r_max bounds the boundary
    radius (the grid half-width used everywhere downstream).
    """

    kind: str
    params: dict
    r: Callable
    dr: Callable
    r_max: float
    code: int = DOMAIN_CUSTOM
    code_params: np.ndarray = field(default_factory=lambda: np.zeros(1))


def _validate_domain(d: StarShapedDomain) -> StarShapedDomain:
    betas = np.linspace(0.0, TWO_PI, 721)
    rv = d.r(betas)
    if np.any(rv <= 0):
        raise ValueError(f"domain {d.kind} has non-positive boundary radius")
    if abs(d.r(0.0) - d.r(TWO_PI)) > 1e-12 or abs(d.dr(0.0) - d.dr(TWO_PI)) > 1e-12:
        raise ValueError(f"domain {d.kind} boundary is not 2*pi-periodic")
    return d


def circle_domain(R: float = 1.0) -> StarShapedDomain:
    R = float(R)
    if R <= 0:
        raise ValueError("circle radius must be positive")
    return _validate_domain(StarShapedDomain(
        kind="circle",
        params={"R": R},
        r=lambda beta: np.full(np.shape(beta), R) if np.ndim(beta) else R,
        dr=lambda beta: np.zeros(np.shape(beta)) if np.ndim(beta) else 0.0,
        r_max=R,
        code=DOMAIN_CIRCLE,
        code_params=np.array([R]),
    ))


def ellipse_domain(a: float, b: float) -> StarShapedDomain:
    a, b = float(a), float(b)
    if a <= 0 or b <= 0:
        raise ValueError("ellipse semi-axes must be positive")

    def r(beta):
        cb = np.cos(beta)
        sb = np.sin(beta)
        return a * b / np.sqrt((b * cb) ** 2 + (a * sb) ** 2)

    def dr(beta):
        cb = np.cos(beta)
        sb = np.sin(beta)
        u = (b * cb) ** 2 + (a * sb) ** 2
        du = (a * a - b * b) * np.sin(2.0 * beta)
        return -0.5 * a * b * du / u ** 1.5

    return _validate_domain(StarShapedDomain(
        kind="ellipse",
        params={"a": a, "b": b},
        r=r,
        dr=dr,
        r_max=max(a, b),
        code=DOMAIN_ELLIPSE,
        code_params=np.array([a, b]),
    ))


def perturbed_domain(a: float = 1.0, b: float = 0.05) -> StarShapedDomain:
    """Four-petal wobble r(beta) = a + b*cos(4*beta)."""
    a, b = float(a), float(b)
    if a - abs(b) <= 0:
        raise ValueError("perturbed circle must keep r > 0")
    return _validate_domain(StarShapedDomain(
        kind="perturbed",
        params={"a": a, "b": b},
        r=lambda beta: a + b * np.cos(4.0 * beta),
        dr=lambda beta: -4.0 * b * np.sin(4.0 * beta),
        r_max=a + abs(b),
        code=DOMAIN_PERTURBED,
        code_params=np.array([a, b]),
    ))


def make_domain(kind: str, **params) -> StarShapedDomain:
    if kind == "circle":
        return circle_domain(params.get("R", 1.0))
    if kind == "ellipse":
        return ellipse_domain(params["a"], params["b"])
    if kind == "perturbed":
        return perturbed_domain(params.get("a", 1.0), params.get("b", 0.05))
    raise ValueError(f"unknown domain kind: {kind!r}")


def inside(d: StarShapedDomain, x, y):
    """True where (x, y) lies in the closed domain: |x|^2 <= r(arg)^2."""
    rb = d.r(np.arctan2(y, x))
    return x * x + y * y <= rb * rb


def boundary_point_and_normal(d: StarShapedDomain, beta):
    """Boundary point p(beta) and inner unit-normal angle nu(beta).

    The boundary curve is p(beta) = r(beta) * (cos beta, sin beta), traversed
    counterclockwise; the inner normal direction is the tangent rotated by
    +pi/2 (interior on the left).

    Returns
    -------
    (x, y, nu) with nu in [0, 2*pi).
    """
    rv = d.r(beta)
    dv = d.dr(beta)
    cb = np.cos(beta)
    sb = np.sin(beta)
    tx = dv * cb - rv * sb
    ty = dv * sb + rv * cb
    # Rot(pi/2) (tx, ty) = (-ty, tx)
    nu = wrap_two_pi(np.arctan2(tx, -ty))
    return rv * cb, rv * sb, nu


def validate_pair(m: IsothermalMetric, d: StarShapedDomain) -> None:
    """Reject metric/domain pairs whose closures blow up inside the domain."""
    if m.singular_radius is not None and d.r_max >= m.singular_radius:
        raise ValueError(
            f"domain r_max={d.r_max} reaches the {m.kind} singularity "
            f"at |x|={m.singular_radius}; need r_max < {m.singular_radius}"
        )


# ---------------------------------------------------------------------------
# non-trapping diagnostic for radial metrics
# ---------------------------------------------------------------------------

def herglotz_margin(m: IsothermalMetric, R: float, n_samples: int = 1000) -> float:
    """Minimum of d/dr (r / c(r)) over r in (0, R], by central differences.

    Positive margin certifies the non-trapping (Herglotz) condition for a
    radial sound speed c = exp(-lam); a negative value means some circle of
    radius < R traps geodesics.  Step h = R / (10 * n_samples).

    Raises ValueError for metrics that are not radially symmetric about the
    origin.
    """
    if not m.is_radial:
        raise ValueError("herglotz_margin needs a radially symmetric metric")
    if R <= 0 or n_samples < 2:
        raise ValueError("herglotz_margin needs R > 0 and n_samples >= 2")

    r = R * np.arange(1, n_samples + 1) / n_samples
    h = R / (10.0 * n_samples)

    def phi(rv):
        # r / c(r) with c = exp(-lam); evaluate lam on the positive x-axis
        return rv * np.exp(m.lam(rv, np.zeros_like(rv)))

    deriv = (phi(r + h) - phi(r - h)) / (2.0 * h)
    return float(deriv.min())

"""Geodesic ray transforms and their inversion on conformally Euclidean disks.

The package traces unit-speed geodesics of metrics e^{2 lam(x)} dx^2 on
star-shaped planar domains, evaluates the ray transform of scalar fields and
of solenoidal vector fields over fan-beam influx coordinates, reconstructs
them by fiberwise-Hilbert backprojection plus an optional Neumann-series
correction, and provides the simplicity diagnostics (conjugate points,
curvature-scaling terminator, radial non-trapping margin) that predict when
the reconstruction is trustworthy.
"""

from .errors import (GeometryInconsistency, GeotomoError, NotApplicable,
                     TrappedGeodesic)
from .fiber_harmonics import (ExtendedFiberData, extend, hilbert_fiber,
                              hilbert_multiplier, prep, restrict)
from .fields import (FieldSampler, ScalarGrid, grad_centered,
                     grid_from_function, make_phantom, read_grid_csv, rel_l2,
                     sample_bilinear, write_grid_csv, write_pgm, zero_grid)
from .geodesic_flow import (GeodesicPath, InfluxCoord, SMPoint, basepoint,
                            batch_basepoints, batch_exit, default_max_steps,
                            trace_from_influx, trace_from_interior)
from .geometry import (IsothermalMetric, MetricValues, StarShapedDomain,
                       boundary_point_and_normal, circle_domain,
                       const_neg_metric, const_pos_metric, ellipse_domain,
                       euclidean_metric, eval_metric, gaussian_curvature,
                       herglotz_margin, inside, lens_metric, make_domain,
                       make_metric, perturbed_domain, radial_metric,
                       validate_pair, wrap_pm_pi, wrap_two_pi)
from .inversion import (BasepointTable, ReconstructionReport, backproject_frc,
                        backproject_hrc, neumann_invert,
                        precompute_basepoints)
from .jacobi import (ConjugatePoint, JacobiTrace, conjugate_points,
                     is_beta_free, terminator, trace_jacobi)
from .ray_transform import (FanBeamData, InfluxGrid, build_influx_grid,
                            forward_i0, forward_i1_xperp, read_fanbeam_csv,
                            sample_fanbeam, write_fanbeam_csv)

__version__ = "0.1.0"

__all__ = [
    "BasepointTable", "ConjugatePoint", "ExtendedFiberData", "FanBeamData",
    "FieldSampler", "GeodesicPath", "GeometryInconsistency", "GeotomoError",
    "InfluxCoord", "InfluxGrid", "IsothermalMetric", "JacobiTrace",
    "MetricValues", "NotApplicable", "ReconstructionReport", "SMPoint",
    "ScalarGrid", "StarShapedDomain", "TrappedGeodesic", "backproject_frc",
    "backproject_hrc", "basepoint", "batch_basepoints", "batch_exit",
    "boundary_point_and_normal", "build_influx_grid", "circle_domain",
    "conjugate_points", "const_neg_metric", "const_pos_metric",
    "default_max_steps", "ellipse_domain", "euclidean_metric", "eval_metric",
    "extend", "forward_i0", "forward_i1_xperp", "gaussian_curvature",
    "grad_centered", "grid_from_function", "herglotz_margin",
    "hilbert_fiber", "hilbert_multiplier", "inside", "is_beta_free",
    "lens_metric", "make_domain", "make_metric", "make_phantom",
    "neumann_invert", "perturbed_domain", "precompute_basepoints", "prep",
    "radial_metric", "read_fanbeam_csv", "read_grid_csv", "rel_l2",
    "restrict", "sample_bilinear", "sample_fanbeam", "terminator",
    "trace_from_influx", "trace_from_interior", "trace_jacobi",
    "validate_pair", "wrap_pm_pi", "wrap_two_pi", "write_fanbeam_csv",
    "write_grid_csv", "write_pgm",
    "zero_grid",
]

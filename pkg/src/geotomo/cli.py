"""Configuration-driven command surface.

Subcommands:

  phantom      render the configured phantom to a grid CSV
  geodesics    trace a fan of geodesics and dump the sampled paths
  forward      ray transform of the configured phantom (--transform i0|i1)
  invert       full pipeline: phantom -> forward -> backproject (+ Neumann)
  terminator   sweep the lens strength and record the terminator value
  simplicity   single is-this-curvature-scaling-free query (--beta B)
  reproduce    canned experiment setups with a manifest

Configuration is a flat `key = value` text file; `#` starts a comment.  All
angles are radians, all lengths in domain units.  Exit codes: 0 success,
2 configuration/usage error, 3 trapped-geodesic abort.  Errors print a single
machine-parsable line `error[<tag>]: <detail>` to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import figures
from .errors import GeometryInconsistency, NotApplicable, TrappedGeodesic
from .fields import ScalarGrid, make_phantom, write_grid_csv, write_pgm
from .geodesic_flow import trace_from_influx
from .geometry import (IsothermalMetric, StarShapedDomain, lens_metric,
                       make_domain, make_metric)
from .inversion import neumann_invert, precompute_basepoints
from .jacobi import is_beta_free, terminator
from .ray_transform import (FanBeamData, build_influx_grid, forward_i0,
                            forward_i1_xperp, write_fanbeam_csv)


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# config file handling
# ---------------------------------------------------------------------------

def parse_config_text(text: str, source: str = "<config>") -> Dict[str, str]:
    out: Dict[str, str] = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{ln}: expected `key = value`, "
                              f"got {raw.strip()!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path: Optional[str]) -> Dict[str, str]:
    if path is None:
        return {}
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        return parse_config_text(fh.read(), source=path)


class RunConfig:
    """Typed access to the flat key-value config with range validation."""

    def __init__(self, raw: Dict[str, str]):
        self.raw = dict(raw)

    def str_(self, key: str, default: Optional[str] = None) -> str:
        if key in self.raw:
            return self.raw[key]
        if default is None:
            raise ConfigError(f"missing required config key {key!r}")
        return default

    def float_(self, key: str, default: Optional[float] = None) -> float:
        if key not in self.raw:
            if default is None:
                raise ConfigError(f"missing required config key {key!r}")
            return float(default)
        try:
            return float(self.raw[key])
        except ValueError:
            raise ConfigError(
                f"config key {key!r} is not a number: {self.raw[key]!r}")

    def int_(self, key: str, default: Optional[int] = None) -> int:
        if key not in self.raw:
            if default is None:
                raise ConfigError(f"missing required config key {key!r}")
            return int(default)
        try:
            return int(self.raw[key])
        except ValueError:
            raise ConfigError(
                f"config key {key!r} is not an integer: {self.raw[key]!r}")

    def bool_(self, key: str, default: bool = False) -> bool:
        if key not in self.raw:
            return default
        v = self.raw[key].lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"config key {key!r} is not a boolean: {v!r}")

    def has(self, key: str) -> bool:
        return key in self.raw


def build_metric(cfg: RunConfig) -> IsothermalMetric:
    kind = cfg.str_("metric.kind", "euclidean")
    try:
        if kind == "euclidean":
            return make_metric("euclidean")
        if kind in ("const_pos", "const_neg"):
            return make_metric(kind, R=cfg.float_("metric.R"))
        if kind == "lens":
            return make_metric(
                "lens", k=cfg.float_("metric.k"),
                sigma=cfg.float_("metric.sigma", 0.25),
                center=(cfg.float_("metric.center_x", 0.2),
                        cfg.float_("metric.center_y", 0.0)))
    except ValueError as e:
        raise ConfigError(str(e))
    raise ConfigError(f"unknown metric.kind {kind!r}")


def build_domain(cfg: RunConfig) -> StarShapedDomain:
    kind = cfg.str_("domain.kind", "circle")
    try:
        if kind == "circle":
            return make_domain("circle", R=cfg.float_("domain.R", 1.0))
        if kind == "ellipse":
            return make_domain("ellipse", a=cfg.float_("domain.a"),
                               b=cfg.float_("domain.b"))
        if kind == "perturbed":
            return make_domain("perturbed", a=cfg.float_("domain.a", 1.0),
                               b=cfg.float_("domain.b", 0.05))
    except ValueError as e:
        raise ConfigError(str(e))
    raise ConfigError(f"unknown domain.kind {kind!r}")


def _parse_features(text: str) -> List[tuple]:
    """`cx:cy:size:amp; cx:cy:size:amp; ...`"""
    feats = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        bits = part.split(":")
        if len(bits) != 4:
            raise ConfigError(
                f"phantom feature {part!r} must be cx:cy:size:amp")
        try:
            feats.append(tuple(float(b) for b in bits))
        except ValueError:
            raise ConfigError(f"non-numeric phantom feature {part!r}")
    return feats


def build_phantom(cfg: RunConfig, d: StarShapedDomain, n: int):
    kind = cfg.str_("phantom.kind", "smooth_bumps")
    if kind not in ("smooth_bumps", "disc_pack"):
        raise ConfigError(f"unknown phantom.kind {kind!r}")
    features = None
    rng = None
    if cfg.has("phantom.features"):
        features = _parse_features(cfg.str_("phantom.features"))
    elif cfg.bool_("phantom.random", False):
        rng = np.random.default_rng(cfg.int_("seed", 0))
    return make_phantom(kind, d, n, features=features, rng=rng)


class Run:
    """Shared plumbing: validated numeric parameters and the output dir."""

    def __init__(self, cfg: RunConfig, out_dir_override: Optional[str] = None):
        self.cfg = cfg
        self.n = cfg.int_("grid.n", 100)
        if self.n < 8:
            raise ConfigError("grid.n must be at least 8")
        # metric is built on first use: sweep commands supply their own
        # per-strength metrics and need only the domain from the config
        self._metric = None
        self.domain = build_domain(cfg)
        self.n_theta = cfg.int_("grid.n_theta", 2 * self.n)
        if self.n_theta < 16 or self.n_theta % 4:
            raise ConfigError("grid.n_theta must be a multiple of 4, >= 16")
        self.n_beta = cfg.int_("grid.n_beta", 2 * self.n)
        self.n_alpha = cfg.int_("grid.n_alpha", self.n)
        if self.n_beta < 4 or self.n_alpha < 2:
            raise ConfigError("influx grid too small (n_beta >= 4, n_alpha >= 2)")
        self.dt = cfg.float_("solver.dt", 2.0 * self.domain.r_max / self.n)
        if self.dt <= 0:
            raise ConfigError("solver.dt must be positive")
        self.max_steps = (cfg.int_("solver.max_steps")
                          if cfg.has("solver.max_steps") else None)
        self.iterations = cfg.int_("solver.iterations", 0)
        if self.iterations < 0:
            raise ConfigError("solver.iterations must be >= 0")
        threads = cfg.int_("threads", 1)
        self.threads = os.cpu_count() or 1 if threads == 0 else threads
        self.out_dir = out_dir_override or cfg.str_("io.out_dir", "out")
        self.pgm = cfg.bool_("io.pgm", False)
        self.figures = cfg.bool_("io.figures", True)
        self.files: List[str] = []

    @property
    def metric(self):
        if self._metric is None:
            self._metric = build_metric(self.cfg)
        return self._metric

    def path(self, name: str) -> str:
        os.makedirs(self.out_dir, exist_ok=True)
        self.files.append(name)
        return os.path.join(self.out_dir, name)

    def emit_grid(self, g: ScalarGrid, stem: str, title: str = "",
                  symmetric: bool = False) -> None:
        write_grid_csv(g, self.path(f"{stem}.csv"))
        if self.pgm:
            write_pgm(g, self.path(f"{stem}.pgm"))
        if self.figures:
            figures.grid_figure(g, self.path(f"{stem}.png"),
                                title=title or stem, symmetric=symmetric)

    def emit_fanbeam(self, data: FanBeamData, stem: str,
                     title: str = "") -> None:
        write_fanbeam_csv(data, self.path(f"{stem}.csv"))
        if self.figures:
            figures.sinogram_figure(data, self.path(f"{stem}.png"),
                                    title=title or stem)


def _write_json(obj, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _metrics_payload(experiment: str, report) -> dict:
    its = []
    for k, (fe, de) in enumerate(zip(report.per_iteration_field_error,
                                     report.per_iteration_data_error)):
        its.append({"iteration": k,
                    "rel_l2_field": None if fe is None else float(fe),
                    "rel_l2_data": float(de)})
    return {"experiment": experiment, "iterations": its}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_phantom(args) -> int:
    run = Run(RunConfig(load_config(args.config)), args.out_dir)
    grid, _ = build_phantom(run.cfg, run.domain, run.n)
    run.emit_grid(grid, "phantom", title="phantom")
    print(f"phantom: n={run.n} kind={run.cfg.str_('phantom.kind', 'smooth_bumps')} "
          f"-> {run.out_dir}")
    return 0


def cmd_geodesics(args) -> int:
    run = Run(RunConfig(load_config(args.config)), args.out_dir)
    count = run.cfg.int_("rays.count", 12)
    alpha = run.cfg.float_("rays.alpha", 0.0)
    if count < 1:
        raise ConfigError("rays.count must be positive")
    paths = []
    rows = []
    for i in range(count):
        beta = 2.0 * np.pi * i / count
        p = trace_from_influx(run.metric, run.domain, beta, alpha, run.dt,
                              max_steps=run.max_steps)
        paths.append(p)
        ts = p.ts
        for t, x, y, th in zip(ts, p.xs, p.ys, p.thetas):
            rows.append((i, beta, alpha, t, x, y, th))
        rows.append((i, beta, alpha, p.tau, p.exit_x, p.exit_y, p.exit_theta))
    with open(run.path("geodesics.csv"), "w") as fh:
        fh.write("ray,beta,alpha,t,x,y,theta\n")
        for r in rows:
            fh.write("%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n" % r)
    if run.figures:
        figures.paths_figure(run.domain, paths, run.path("geodesics.png"),
                             title=f"{run.metric.kind} geodesics")
    print(f"geodesics: {count} rays (alpha={alpha:g}) -> {run.out_dir}")
    return 0


def _forward_data(run: Run, transform: str, sampler) -> FanBeamData:
    grid = build_influx_grid(run.n_beta, run.n_alpha)
    fwd = forward_i0 if transform == "i0" else forward_i1_xperp
    return fwd(run.metric, run.domain, sampler, grid, run.dt,
               max_steps=run.max_steps, threads=run.threads)


def cmd_forward(args) -> int:
    run = Run(RunConfig(load_config(args.config)), args.out_dir)
    grid, sampler = build_phantom(run.cfg, run.domain, run.n)
    data = _forward_data(run, args.transform, sampler)
    run.emit_grid(grid, "phantom", title="input field")
    run.emit_fanbeam(data, "fanbeam",
                     title=f"{args.transform} data, {run.metric.kind}")
    print(f"forward {args.transform}: {run.n_beta}x{run.n_alpha} nodes "
          f"-> {run.out_dir}")
    return 0


def _run_inversion(run: Run, formula: str, iterations: int,
                   experiment: str) -> dict:
    """phantom -> forward -> table -> neumann; emits the standard artifacts.

    Returns the headline metrics dict (the caller may extend it).
    """
    truth, sampler = build_phantom(run.cfg, run.domain, run.n)
    transform = "i0" if formula == "frc" else "i1"
    data = _forward_data(run, transform, sampler)
    table = precompute_basepoints(run.metric, run.domain, run.n,
                                  n_theta=run.n_theta, dt=run.dt,
                                  threads=run.threads)
    report = neumann_invert(data, formula, iterations, run.metric,
                            run.domain, table, dt=run.dt, truth=truth,
                            max_steps=run.max_steps, threads=run.threads)

    recon = report.result
    err_grid = truth.with_values(np.abs(recon.values - truth.values))
    run.emit_grid(truth, "phantom", title="ground truth")
    run.emit_fanbeam(data, "fanbeam", title=f"{transform} data")
    run.emit_grid(recon, "reconstruction",
                  title=f"{formula} reconstruction, {run.metric.kind}")
    run.emit_grid(err_grid, "pointwise_error", title="|reconstruction - truth|")
    metrics = _metrics_payload(experiment, report)
    _write_json(metrics, run.path("metrics.json"))
    if run.figures:
        figures.convergence_figure(report.per_iteration_field_error,
                                   report.per_iteration_data_error,
                                   run.path("convergence.png"),
                                   title=f"{experiment}: error per iteration")

    final_field = report.per_iteration_field_error[-1]
    final_data = report.per_iteration_data_error[-1]
    print(f"{experiment}: iterations={iterations} "
          f"rel_l2_field={final_field if final_field is not None else 'n/a'} "
          f"rel_l2_data={final_data:.6g} trapped_nodes={report.trapped_nodes}")
    headline = {
        "formula": formula,
        "iterations": iterations,
        "final_rel_l2_field": final_field,
        "final_rel_l2_data": final_data,
        "trapped_nodes": report.trapped_nodes,
        "aborted": report.aborted,
    }
    if report.aborted:
        raise TrappedGeodesic(
            "forward re-computation hit a trapped geodesic; partial report "
            f"written to {run.out_dir}")
    return headline, recon, truth


def cmd_invert(args) -> int:
    run = Run(RunConfig(load_config(args.config)), args.out_dir)
    iterations = (args.iterations if args.iterations is not None
                  else run.iterations)
    if iterations < 0:
        raise ConfigError("--iterations must be >= 0")
    _run_inversion(run, args.formula, iterations, f"invert-{args.formula}")
    return 0


def cmd_terminator(args) -> int:
    cfg = RunConfig(load_config(args.config))
    run = Run(cfg, args.out_dir)
    if args.k_min > args.k_max:
        raise ConfigError("--k-min must not exceed --k-max")
    if args.k_steps < 1:
        raise ConfigError("--k-steps must be positive")
    ks = np.linspace(args.k_min, args.k_max, args.k_steps)
    sigma = cfg.float_("metric.sigma", 0.25)
    center = (cfg.float_("metric.center_x", 0.0),
              cfg.float_("metric.center_y", 0.0))
    eps = cfg.float_("terminator.eps", 1e-3)
    cap = cfg.float_("terminator.beta_cap", 64.0)
    scan = (cfg.int_("terminator.n_beta", 256),
            cfg.int_("terminator.n_alpha", 128))
    dt = cfg.float_("terminator.dt", 5e-3)
    rows = []
    for k in ks:
        m = lens_metric(float(k), sigma, center)
        try:
            bt = terminator(m, run.domain, eps=eps, beta_cap=cap, dt=dt,
                            grid=scan)
        except NotApplicable:
            bt = float("nan")
        rows.append((float(k), bt))
        print(f"k={k:.6g} beta_ter={bt:.6g}")
    with open(run.path("terminator.csv"), "w") as fh:
        fh.write("k,beta_ter\n")
        for k, bt in rows:
            fh.write("%.17g,%.17g\n" % (k, bt))
    if run.figures:
        figures.terminator_figure([r[0] for r in rows], [r[1] for r in rows],
                                  run.path("terminator.png"),
                                  title=f"lens sweep, sigma={sigma:g}")
    return 0


def cmd_simplicity(args) -> int:
    cfg = RunConfig(load_config(args.config))
    run = Run(cfg, args.out_dir)
    scan = (cfg.int_("terminator.n_beta", 256),
            cfg.int_("terminator.n_alpha", 128))
    dt = cfg.float_("terminator.dt", 5e-3)
    free = is_beta_free(run.metric, run.domain, args.beta, dt=dt, grid=scan)
    _write_json({"beta_c": args.beta, "free": bool(free),
                 "scan": list(scan), "dt": dt},
                run.path("simplicity.json"))
    print(f"beta_c={args.beta:g} free={'true' if free else 'false'}")
    return 0


# ---------------------------------------------------------------------------
# reproduce: canned experiment setups
# ---------------------------------------------------------------------------

_EXPERIMENTS: Dict[str, Dict[str, str]] = {
    # constant positive curvature, one-shot scalar reconstruction
    "cpc": {
        "metric.kind": "const_pos", "metric.R": "2.0",
        "domain.kind": "circle", "domain.R": "1.0",
        "phantom.kind": "smooth_bumps",
        "grid.n": "200", "solver.iterations": "0",
    },
    # constant negative curvature
    "cnc": {
        "metric.kind": "const_neg", "metric.R": "2.0",
        "domain.kind": "circle", "domain.R": "1.0",
        "phantom.kind": "smooth_bumps",
        "grid.n": "200", "solver.iterations": "0",
    },
    # sphere-like metric on an ellipse: conjugate pairs enter near the long
    # axis and the left bump is essentially lost
    "nonsimple-equator": {
        "metric.kind": "const_pos", "metric.R": "1.0",
        "domain.kind": "ellipse", "domain.a": "1.2", "domain.b": "0.8",
        "phantom.kind": "smooth_bumps",
        "phantom.features":
            "-0.85:0.0:0.12:1.0; 0.0:0.0:0.15:1.0; 0.5:-0.25:0.12:0.8",
        "grid.n": "150", "solver.iterations": "0",
    },
    # gentle lens: Neumann series converges in a couple of iterations
    "exp1": {
        "metric.kind": "lens", "metric.k": "0.3", "metric.sigma": "0.25",
        "metric.center_x": "0.2", "metric.center_y": "0.0",
        "domain.kind": "circle", "domain.R": "1.0",
        "phantom.kind": "smooth_bumps",
        "grid.n": "150", "solver.iterations": "5",
    },
    # medium lens: slower convergence
    "exp2": {
        "metric.kind": "lens", "metric.k": "0.6", "metric.sigma": "0.25",
        "metric.center_x": "0.2", "metric.center_y": "0.0",
        "domain.kind": "circle", "domain.R": "1.0",
        "phantom.kind": "smooth_bumps",
        "grid.n": "150", "solver.iterations": "5",
    },
    # strong lens past the simplicity threshold: artifacts persist
    "exp3": {
        "metric.kind": "lens", "metric.k": "1.2", "metric.sigma": "0.25",
        "metric.center_x": "0.2", "metric.center_y": "0.0",
        "domain.kind": "circle", "domain.R": "1.0",
        "phantom.kind": "smooth_bumps",
        "grid.n": "150", "solver.iterations": "5",
    },
    # centered-lens terminator sweep across the simplicity transition
    "terminator-sweep": {
        "metric.kind": "lens", "metric.sigma": "0.25",
        "metric.center_x": "0.0", "metric.center_y": "0.0",
        "domain.kind": "circle", "domain.R": "1.0",
    },
}

_SWEEP_KS = [0.20, 0.30, 0.40, 0.45, 0.49, 0.60, 0.80, 1.00, 1.23]


def _band_medians(recon: ScalarGrid, truth: ScalarGrid):
    """Median pointwise error over the left band (x < -0.6) and the central
    band (|x| < 0.3), inside nodes only."""
    ax = np.linspace(-truth.r_max, truth.r_max, truth.n)
    X = ax[:, None] * np.ones((1, truth.n))
    err = np.abs(recon.values - truth.values)
    m = truth.inside_mask
    left = m & (X < -0.6)
    center = m & (np.abs(X) < 0.3)
    return (float(np.median(err[left])) if left.any() else float("nan"),
            float(np.median(err[center])) if center.any() else float("nan"))


def cmd_reproduce(args) -> int:
    name = args.experiment
    base = dict(_EXPERIMENTS[name])
    base.update(load_config(args.config))
    # command-line overrides, mostly so tests can shrink the runs
    if args.n is not None:
        base["grid.n"] = str(args.n)
    if args.iterations is not None:
        base["solver.iterations"] = str(args.iterations)
    if args.threads is not None:
        base["threads"] = str(args.threads)
    cfg = RunConfig(base)
    run = Run(cfg, args.out_dir or f"out-{name}")

    manifest = {"experiment": name, "files": run.files, "metrics": {}}

    if name == "terminator-sweep":
        ks = (_parse_k_list(args.k_list) if args.k_list else list(_SWEEP_KS))
        eps = cfg.float_("terminator.eps", 1e-3)
        cap = cfg.float_("terminator.beta_cap", 64.0)
        scan = (cfg.int_("terminator.n_beta", 256),
                cfg.int_("terminator.n_alpha", 128))
        dt = cfg.float_("terminator.dt", 5e-3)
        sigma = cfg.float_("metric.sigma", 0.25)
        center = (cfg.float_("metric.center_x", 0.0),
                  cfg.float_("metric.center_y", 0.0))
        rows = []
        for k in ks:
            m = lens_metric(float(k), sigma, center)
            try:
                bt = terminator(m, run.domain, eps=eps, beta_cap=cap,
                                dt=dt, grid=scan)
            except NotApplicable:
                bt = float("nan")
            rows.append((float(k), bt))
            print(f"k={k:.6g} beta_ter={bt:.6g}")
        with open(run.path("terminator.csv"), "w") as fh:
            fh.write("k,beta_ter\n")
            for k, bt in rows:
                fh.write("%.17g,%.17g\n" % (k, bt))
        if run.figures:
            figures.terminator_figure(
                [r[0] for r in rows], [r[1] for r in rows],
                run.path("terminator.png"), title="terminator sweep")
        crossing = None
        for (k0, b0), (k1, b1) in zip(rows, rows[1:]):
            if np.isfinite(b0) and np.isfinite(b1) and b0 > 1.0 >= b1:
                crossing = [k0, k1]
                break
        manifest["metrics"] = {
            "sweep": [{"k": k, "beta_ter": (None if not np.isfinite(b)
                                            else b)} for k, b in rows],
            "simplicity_crossing_k": crossing,
        }
    else:
        formula = "frc"
        iterations = run.iterations
        headline, recon, truth = _run_inversion(run, formula, iterations,
                                                name)
        if name == "nonsimple-equator":
            left, center = _band_medians(recon, truth)
            headline["left_band_median_error"] = left
            headline["central_band_median_error"] = center
            headline["band_ratio"] = left / center if center > 0 else None
        manifest["metrics"] = headline

    manifest["files"] = sorted(set(run.files))
    os.makedirs(run.out_dir, exist_ok=True)
    _write_json(manifest, os.path.join(run.out_dir, "manifest.json"))
    return 0


def _parse_k_list(text: str) -> List[float]:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"bad --k-list {text!r}")


# ---------------------------------------------------------------------------
# parser / dispatch
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"error[usage]: {message}", file=sys.stderr)
        self.print_usage(sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="geotomo",
                description="geodesic ray transforms on conformal disks: "
                            "forward data, diagnostics, reconstruction")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, **kw):
        sp = sub.add_parser(name, **kw)
        sp.add_argument("--config", default=None,
                        help="flat key=value config file")
        sp.add_argument("--out-dir", default=None,
                        help="output directory (overrides io.out_dir)")
        sp.set_defaults(func=func)
        return sp

    add("phantom", cmd_phantom, help="render the configured phantom")

    add("geodesics", cmd_geodesics, help="trace and dump a geodesic fan")

    sp = add("forward", cmd_forward, help="forward ray transform")
    sp.add_argument("--transform", choices=("i0", "i1"), required=True)

    sp = add("invert", cmd_invert, help="reconstruct from simulated data")
    sp.add_argument("--formula", choices=("frc", "hrc"), required=True)
    sp.add_argument("--iterations", type=int, default=None)

    sp = add("terminator", cmd_terminator, help="lens-strength terminator sweep")
    sp.add_argument("--k-min", type=float, required=True)
    sp.add_argument("--k-max", type=float, required=True)
    sp.add_argument("--k-steps", type=int, required=True)

    sp = add("simplicity", cmd_simplicity,
             help="check one curvature scaling for perpendicular zeros")
    sp.add_argument("--beta", type=float, required=True)

    sp = add("reproduce", cmd_reproduce, help="run a canned experiment")
    sp.add_argument("--experiment", choices=sorted(_EXPERIMENTS), required=True)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--iterations", type=int, default=None)
    sp.add_argument("--threads", type=int, default=None)
    sp.add_argument("--k-list", default=None,
                    help="comma-separated lens strengths (terminator-sweep)")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error[config]: {e}", file=sys.stderr)
        return 2
    except (TrappedGeodesic, NotApplicable) as e:
        print(f"error[trapped]: {e}", file=sys.stderr)
        return 3
    except GeometryInconsistency as e:
        print(f"error[geometry]: {e}", file=sys.stderr)
        return 3
    except ValueError as e:
        print(f"error[config]: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

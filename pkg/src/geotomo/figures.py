"""Matplotlib renderings written next to the delimited outputs.

Everything uses the Agg backend so the CLI works headless; each helper writes
one PNG and closes its figure.  Figures are a human-inspection surface only;
the CSV/JSON files remain the machine-readable contract.
"""

from __future__ import annotations

from typing import Optional, Sequence

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .fields import ScalarGrid  # noqa: E402
from .geometry import StarShapedDomain  # noqa: E402
from .ray_transform import FanBeamData  # noqa: E402

_DPI = 130


def _boundary_xy(d: StarShapedDomain, n: int = 512):
    beta = np.linspace(0.0, 2.0 * np.pi, n)
    r = d.r(beta)
    return r * np.cos(beta), r * np.sin(beta)


def grid_figure(g: ScalarGrid, path: str, title: str = "",
                symmetric: bool = False) -> str:
    """Heat map of a scalar grid with the domain boundary overlaid."""
    fig, ax = plt.subplots(figsize=(5.2, 4.4), constrained_layout=True)
    kw = {}
    if symmetric:
        m = float(np.abs(g.values).max()) or 1.0
        kw = dict(vmin=-m, vmax=m, cmap="RdBu_r")
    im = ax.imshow(g.values.T, origin="lower",
                   extent=(-g.r_max, g.r_max, -g.r_max, g.r_max), **kw)
    bx, by = _boundary_xy(g.domain)
    ax.plot(bx, by, color="black", lw=0.8)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def sinogram_figure(data: FanBeamData, path: str, title: str = "") -> str:
    """Fan-beam data as an image over (beta, alpha)."""
    g = data.grid
    fig, ax = plt.subplots(figsize=(5.6, 4.0), constrained_layout=True)
    im = ax.imshow(data.values.T, origin="lower", aspect="auto",
                   extent=(0.0, 2.0 * np.pi, -0.5 * np.pi, 0.5 * np.pi))
    ax.set_xlabel("boundary parameter beta")
    ax.set_ylabel("incidence angle alpha")
    ax.set_title(title or data.label or
                 f"fan-beam data {g.n_beta}x{g.n_alpha}")
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def paths_figure(d: StarShapedDomain, paths: Sequence, path: str,
                 title: str = "") -> str:
    """Geodesic fan over the domain."""
    fig, ax = plt.subplots(figsize=(4.8, 4.8), constrained_layout=True)
    bx, by = _boundary_xy(d)
    ax.plot(bx, by, color="black", lw=1.0)
    for p in paths:
        ax.plot(p.xs, p.ys, lw=0.7)
        ax.plot([p.exit_x], [p.exit_y], marker=".", ms=3, color="black")
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def convergence_figure(field_errors: Sequence[Optional[float]],
                       data_errors: Sequence[float], path: str,
                       title: str = "") -> str:
    """Per-iteration relative errors on a log scale."""
    fig, ax = plt.subplots(figsize=(5.2, 3.8), constrained_layout=True)
    its = np.arange(len(data_errors))
    fe = [e for e in field_errors if e is not None]
    if len(fe) == len(field_errors) and fe:
        ax.semilogy(its, fe, marker="o", label="field error")
    ax.semilogy(its, data_errors, marker="s", label="data error")
    ax.set_xlabel("iteration")
    ax.set_ylabel("relative L2 error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def terminator_figure(ks: Sequence[float], betas: Sequence[float],
                      path: str, title: str = "") -> str:
    """Terminator value against the lens strength, with the simplicity line."""
    fig, ax = plt.subplots(figsize=(5.2, 3.8), constrained_layout=True)
    ax.plot(ks, betas, marker="o")
    ax.axhline(1.0, color="red", lw=0.8, ls="--", label="simplicity threshold")
    ax.set_xlabel("lens strength k")
    ax.set_ylabel("terminator value")
    ax.grid(True, alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path

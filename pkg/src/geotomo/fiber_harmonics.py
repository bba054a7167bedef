"""Fiberwise antipodal extension and Hilbert transform of fan-beam data.

Influx data only cover half of each direction fiber (incidence angles in
(-pi/2, pi/2)).  Because the alpha nodes are cell-centered with spacing
pi/n_alpha, appending the antipodal half produces a *uniform* periodic grid
of 2*n_alpha samples over the whole fiber, on which the fiberwise Hilbert
transform is exactly diagonal in the discrete Fourier basis:

    (H u)_k = -i sgn(k) u_k,   sgn(0) = 0,

with the unpaired Nyquist coefficient zeroed.  The direction fiber is
theta = nu(beta) + alpha; the offset nu(beta) only multiplies each mode by a
unimodular constant, which commutes with the diagonal multiplier, so the FFT
may act in alpha directly.

The antipodal extension parity selects which half of the harmonic spectrum
the data represent: odd extension (w(beta, alpha+pi) = -w(beta, alpha)) keeps
only odd modes and is the right completion for scalar-transform data; even
extension keeps even modes and is the completion for the solenoidal-field
route.  "extend then H then restrict" is then exactly H composed with the
corresponding parity projection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ray_transform import FanBeamData, InfluxGrid


@dataclass
class ExtendedFiberData:
    """Full-fiber samples: (n_beta, 2*n_alpha), uniform in the fiber angle."""

    grid: InfluxGrid
    values: np.ndarray
    parity: str  # "odd" or "even"

    def fiber_angles(self) -> np.ndarray:
        """Uniform fiber offsets; the first n_alpha coincide with grid.alphas."""
        n_alpha = self.grid.n_alpha
        return -0.5 * np.pi + np.pi * (np.arange(2 * n_alpha) + 0.5) / n_alpha


def extend(data: FanBeamData, parity: str) -> ExtendedFiberData:
    """Antipodal extension of influx data to the full fiber."""
    if parity not in ("odd", "even"):
        raise ValueError(f"parity must be 'odd' or 'even', got {parity!r}")
    v = np.asarray(data.values, dtype=np.float64)
    sign = -1.0 if parity == "odd" else 1.0
    return ExtendedFiberData(data.grid, np.concatenate([v, sign * v], axis=1),
                             parity)


def hilbert_multiplier(n_fiber: int) -> np.ndarray:
    """-i sgn(k) over FFT frequencies of length n_fiber, Nyquist zeroed."""
    mult = -1j * np.sign(np.fft.fftfreq(n_fiber))
    if n_fiber % 2 == 0:
        mult[n_fiber // 2] = 0.0
    return mult


def hilbert_fiber(ext: ExtendedFiberData) -> ExtendedFiberData:
    """Fiberwise Hilbert transform via FFT along the fiber axis.

    Real input comes back real (the imaginary residue, below 1e-12 for
    band-consistent data, is discarded); complex input stays complex.
    """
    v = ext.values
    spectrum = np.fft.fft(v, axis=1) * hilbert_multiplier(v.shape[1])
    out = np.fft.ifft(spectrum, axis=1)
    if not np.iscomplexobj(v):
        out = out.real
    return ExtendedFiberData(ext.grid, out, ext.parity)


def restrict(ext: ExtendedFiberData) -> FanBeamData:
    """Keep the influx half of the fiber."""
    return FanBeamData(ext.grid, ext.values[:, :ext.grid.n_alpha].copy())


def prep(data: FanBeamData, formula: str) -> FanBeamData:
    """Hilbert-transformed parity completion of measured data.

    formula "frc" (scalar reconstruction): odd extension.
    formula "hrc" (solenoidal-field reconstruction): even extension.
    """
    if formula == "frc":
        parity = "odd"
    elif formula == "hrc":
        parity = "even"
    else:
        raise ValueError(f"formula must be 'frc' or 'hrc', got {formula!r}")
    out = restrict(hilbert_fiber(extend(data, parity)))
    out.label = f"prepped-{formula}"
    return out

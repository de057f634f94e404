"""Transmission spectra over detuning grids, optical depth, and the
absorption scaling of the array with atom number.

For a passive array (control off) the optical depth alpha = -ln T grows
linearly with n except at half-wave spacings, where the atoms interfere
collectively and alpha saturates logarithmically; absorption is maximal at
odd quarter-wave spacings.  With the control on, the spectra show a
transparency peak at zero detuning whose surroundings range from
textbook-like to strongly asymmetric depending on the spacing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import scattering
from .numerics import SampledGrid, linear_fit
from .scattering import ArrayGeometry, AtomParams, DriveConfig

OPAQUE_ALPHA = float("inf")


@dataclass(frozen=True)
class SpectralResponse:
    """Complex transmitted amplitude 1/M11 on a uniform detuning grid."""

    grid: SampledGrid
    atom: AtomParams
    rabi: float
    geom: ArrayGeometry

    @property
    def deltas(self) -> np.ndarray:
        return self.grid.x

    @property
    def amplitude(self) -> np.ndarray:
        return self.grid.y

    @property
    def transmission(self) -> np.ndarray:
        return np.abs(self.grid.y) ** 2


@dataclass(frozen=True)
class DepthScan:
    """Optical depth versus atom number with its straight-line fit."""

    ns: np.ndarray
    alphas: np.ndarray
    slope: float
    intercept: float
    r_squared: float


def sweep_transmission(
    atom: AtomParams, deltas: np.ndarray, rabi: float, geom: ArrayGeometry
) -> SpectralResponse:
    """Transmitted amplitude on a uniform detuning grid.

    The propagation phase is evaluated at the full signal frequency
    omega_eg + delta per point; with the control field on, T(0) is a local
    maximum (the transparency peak), while a passive array shows a dip.
    """
    deltas = np.asarray(deltas, dtype=float)
    amp = scattering.amplitude_array(atom, rabi, deltas, geom)
    grid = SampledGrid.from_points(deltas, amp)
    if not grid.uniform:
        raise ValueError("detuning grid must be uniform")
    return SpectralResponse(grid=grid, atom=atom, rabi=rabi, geom=geom)


def optical_depth(
    atom: AtomParams, geom: ArrayGeometry, rabi: float = 0.0, delta: float = 0.0
) -> float:
    """Optical depth alpha = -ln T, computed in log space.

    Stays finite far beyond the point where T itself underflows double
    precision; returns +inf only if the log-magnitude itself overflows.
    """
    log_m11 = scattering.log_abs_m11(atom, DriveConfig(rabi, delta), geom)
    alpha = 2 * log_m11
    if not np.isfinite(alpha):
        return OPAQUE_ALPHA
    return float(alpha)


def beer_scan(
    atom: AtomParams,
    l: float,
    n_max: int,
    line_speed: float = scattering.LINE_SPEED_DEFAULT,
) -> DepthScan:
    """Optical depth alpha(n) for n = 1..n_max at zero detuning, control off,
    with an ordinary least-squares line fit.

    Away from half-wave spacings the fit is essentially perfect (Beer-like
    scaling); its slope is the per-atom optical depth of the array.
    """
    if n_max < 3:
        raise ValueError("need n_max >= 3 for a meaningful fit")
    ns = np.arange(1, n_max + 1)
    alphas = np.array(
        [optical_depth(atom, ArrayGeometry(int(n), l, line_speed)) for n in ns]
    )
    slope, intercept, r2 = linear_fit(ns, alphas)
    return DepthScan(ns=ns, alphas=alphas, slope=slope, intercept=intercept, r_squared=r2)


def half_wave_depth(r0: complex, n: int) -> float:
    """Optical depth in the half-wave spacing limit.

    At l -> m*lambda/2 the unit cell degenerates and the array response
    collapses to M11 = (1 + (n-1) r) / (1 - r), so
    alpha = 2 ln |(1 + (n-1) r0) / (1 - r0)|.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    return float(2 * np.log(abs((1 + (n - 1) * r0) / (1 - r0))))


def write_spectrum_csv(resp: SpectralResponse, path, meta: dict | None = None) -> None:
    """Write a spectrum as CSV: delta_rad_s, re_amp, im_amp, transmission.

    Metadata (parameters, rate convention) goes into '#'-prefixed header
    lines so the file stays self-describing yet machine-readable.
    """
    lines = []
    header = {
        "n": resp.geom.n,
        "l_m": resp.geom.l,
        "line_speed_m_s": resp.geom.c,
        "rabi_rad_s": resp.rabi,
        "gamma_eg_rad_s": resp.atom.gamma_eg,
        "gamma_es_rad_s": resp.atom.gamma_es,
        "gamma_sg_rad_s": resp.atom.gamma_sg,
        "omega_eg_rad_s": resp.atom.omega_eg,
    }
    if meta:
        header.update(meta)
    for key, value in header.items():
        lines.append(f"# {key} = {value}")
    lines.append("delta_rad_s,re_amp,im_amp,transmission")
    T = resp.transmission
    for x, y, t in zip(resp.deltas, resp.amplitude, T):
        lines.append(f"{x:.12g},{y.real:.12g},{y.imag:.12g},{t:.12g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")

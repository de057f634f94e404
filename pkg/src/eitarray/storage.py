"""Gaussian pulse storage in the array: the three operating constraints and
the trapped-fraction efficiency model.

Protocol: with the control field on, a spectrally Gaussian signal pulse
(unit energy, amplitude standard deviation sigma) is slowed inside the
medium; switching the control off while the pulse is inside converts it to a
stationary excitation.  The operating point for n atoms is fixed by three
conditions:

* transparency  — |Omega| such that the scattering-free transmission
  exp(-2 n Re r(0)) equals ``target_T`` (default 0.99),
* slowdown      — spacing l such that the analytic group velocity equals
  ``target_vg_fraction * c`` (default c/100), exactly invertible,
* spectral fit  — sigma such that the transmitted energy
  int |E_in/M11|^2 d delta equals ``target_pass`` (default 0.98).

The efficiency eta is the largest energy of the transmitted time profile
contained in any window of one transit time d/v_g: under uniform slow
transport, the field inside the medium at switch-off is exactly the field
that would exit during the next transit, so a pulse longer than the transit
window only stores its central part.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .dispersion import group_velocity_analytic
from .errors import EitArrayError
from .numerics import SampledGrid, find_root, spectrum_to_time
from .scattering import (
    LINE_SPEED_DEFAULT,
    ArrayGeometry,
    AtomParams,
    DriveConfig,
    amplitude_array,
    single_pass_transmission,
    transmission,
    _reflection,
)

GRID_ENERGY_TOL = 1e-3  # max spectral energy fraction allowed outside the grid


class NoSolution(EitArrayError):
    """A constraint cannot be met anywhere in the search bracket."""


class GridTooNarrow(EitArrayError):
    """More than 0.1 % of the pulse energy falls outside the spectral grid."""


@dataclass(frozen=True)
class PulseSpec:
    """Unit-energy Gaussian spectral pulse and its evaluation grid.

    ``sigma`` is the standard deviation of the amplitude profile
    E(delta) = (pi sigma^2)^(-1/4) exp(-delta^2 / (2 sigma^2)); the grid
    spans ``span_sigmas`` standard deviations either side of zero with
    ``points`` samples (a power of two, for the time-domain transform).
    """

    sigma: float
    span_sigmas: float = 10.0
    points: int = 2**14

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.span_sigmas < 2:
            raise ValueError("need a spectral span of at least 2 sigma")
        if self.points < 2**12 or (self.points & (self.points - 1)) != 0:
            raise ValueError("points must be a power of two, at least 4096")

    def amplitude(self, deltas) -> np.ndarray:
        deltas = np.asarray(deltas, dtype=float)
        norm = (math.pi * self.sigma**2) ** -0.25
        return norm * np.exp(-(deltas**2) / (2 * self.sigma**2))

    def grid(self) -> SampledGrid:
        dw = 2 * self.span_sigmas * self.sigma / self.points
        x0 = -(self.points // 2) * dw
        deltas = x0 + np.arange(self.points) * dw
        g = SampledGrid.regular(x0, dw, self.amplitude(deltas))
        energy = float(np.trapezoid(np.abs(g.y) ** 2, g.x))
        if abs(energy - 1.0) > 1e-6:
            raise ValueError(f"discretized pulse energy {energy} deviates from 1")
        return g


@dataclass(frozen=True)
class StorageResult:
    """Solved operating point and efficiency for one array size."""

    n: int
    l: float = float("nan")
    rabi: float = float("nan")
    sigma: float = float("nan")
    eta: float = float("nan")
    t0_free: float = float("nan")  # scattering-free T(0), the solved target
    t0_full: float = float("nan")  # full-response T(0)
    vg: float = float("nan")
    transit: float = float("nan")
    clipped_fraction: float = float("nan")
    error: str | None = None


def solve_rabi(atom: AtomParams, n: int, target_T: float = 0.99) -> float:
    """Control Rabi modulus giving scattering-free transmission target_T.

    Solves exp(-2 n Re r(0; Omega)) = target_T by a bracketed root find in
    |Omega| (Re r(0) decreases monotonically with the drive).  Raises
    NoSolution when even the undriven atom is too transparent.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (0.0 < target_T < 1.0):
        raise ValueError("target_T must lie in (0, 1)")
    rho = -math.log(target_T) / (2 * n)
    r_max = atom.gamma_eg / (2 * atom.gamma_e)
    if rho > r_max:
        raise NoSolution(
            f"required Re r(0) = {rho:.3e} exceeds the undriven maximum {r_max:.3e}"
        )

    def excess(rabi: float) -> float:
        return float(_reflection(atom, rabi, 0.0).real) - rho

    hi = 2.0 * math.sqrt(2 * atom.gamma_s * atom.gamma_eg / rho)
    while excess(hi) > 0:
        hi *= 2
    return find_root(excess, 0.0, hi, tol=1e-9 * hi)


def solve_separation(
    atom: AtomParams,
    n: int,
    rabi: float,
    target_vg_fraction: float = 0.01,
    line_speed: float = LINE_SPEED_DEFAULT,
) -> float:
    """Spacing that makes the analytic group velocity a fraction of c.

    Closed-form inversion: l = 2 n gamma_eg c f / ((1-f) (n-1) |Omega|^2);
    substituting back returns v_g = f*c identically.
    """
    if n < 2:
        raise ValueError("need n >= 2 for a finite medium")
    if rabi <= 0:
        raise ValueError("need |Omega| > 0")
    f = target_vg_fraction
    if not (0.0 < f < 1.0):
        raise ValueError("target_vg_fraction must lie in (0, 1)")
    return 2 * n * atom.gamma_eg * line_speed * f / ((1 - f) * (n - 1) * rabi**2)


def transmitted_fraction(
    atom: AtomParams, rabi: float, geom: ArrayGeometry, pulse: PulseSpec
) -> float:
    """Spectral energy of E_in/M11 surviving the array (trapezoidal)."""
    g = pulse.grid()
    out = g.y * amplitude_array(atom, rabi, g.x, geom)
    return float(np.trapezoid(np.abs(out) ** 2, g.x))


def solve_sigma(
    atom: AtomParams,
    rabi: float,
    geom: ArrayGeometry,
    target_pass: float = 0.98,
    span_sigmas: float = 10.0,
    points: int = 2**14,
) -> float:
    """Pulse width whose transmitted spectral energy equals target_pass.

    The transmitted fraction falls from T(0) toward zero as sigma grows, so
    a bracketed root find applies; NoSolution when even a vanishingly narrow
    pulse cannot pass (window centre too opaque).
    """
    if not (0.0 < target_pass < 1.0):
        raise ValueError("target_pass must lie in (0, 1)")
    t0 = transmission(atom, DriveConfig(rabi, 0.0), geom)
    if t0 <= target_pass:
        raise NoSolution(
            f"T(0) = {t0:.6f} <= target {target_pass}; no pulse width can pass"
        )

    def excess(sigma: float) -> float:
        p = PulseSpec(sigma, span_sigmas=span_sigmas, points=points)
        return transmitted_fraction(atom, rabi, geom, p) - target_pass

    seed = rabi**2 / atom.gamma_eg if rabi > 0 else atom.gamma_s
    lo = seed
    while excess(lo) < 0:
        lo /= 4
        if lo < seed * 1e-12:
            raise NoSolution("transmitted fraction below target even for tiny sigma")
    hi = lo * 2
    while excess(hi) > 0:
        hi *= 2
    return find_root(excess, lo, hi, tol=1e-9 * hi)


def _golden_max(f, a: float, b: float, tol: float) -> float:
    """Golden-section maximum of a unimodal function on [a, b]."""
    invphi = (math.sqrt(5) - 1) / 2
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
    return max(f1, f2)


def trapped_energy(spec: SampledGrid, tau: float, pad_factor: int = 4) -> float:
    """Largest energy of the spectrum's time profile in any window of
    duration tau.

    The spectrum is zero-padded by ``pad_factor`` before the transform --
    exact sinc interpolation for a band-limited signal -- so the windowed
    trapezoidal energy is insensitive to the time discretization.  The
    switch-off time is located by a coarse scan around the intensity peak
    followed by golden-section refinement.  A global spectral phase leaves
    the result unchanged (only |e(t)|^2 enters).
    """
    if pad_factor < 1 or (pad_factor & (pad_factor - 1)) != 0:
        raise ValueError("pad_factor must be a power of two")
    if tau <= 0:
        raise ValueError("window duration must be positive")
    n_pts = len(spec)
    n_pad = n_pts * pad_factor
    padded_y = np.zeros(n_pad, dtype=complex)
    padded_y[(n_pad - n_pts) // 2 : (n_pad + n_pts) // 2] = spec.y
    padded = SampledGrid.regular(spec.x[0] - (n_pad - n_pts) // 2 * spec.dx, spec.dx, padded_y)
    signal = spectrum_to_time(padded)
    t = signal.x
    dt = signal.dx
    power = np.abs(signal.y) ** 2
    cum = np.concatenate([[0.0], np.cumsum((power[1:] + power[:-1]) * (dt / 2))])

    def window(t0: float) -> float:
        return float(np.interp(t0 + tau, t, cum) - np.interp(t0, t, cum))

    t_peak = t[int(np.argmax(power))]
    starts = t_peak - tau + np.arange(257) / 256 * tau
    coarse = np.array([window(t0) for t0 in starts])
    j = int(np.argmax(coarse))
    a = starts[max(j - 2, 0)]
    b = starts[min(j + 2, len(starts) - 1)]
    return _golden_max(window, a, b, tol=dt * 1e-3)


def storage_efficiency(
    atom: AtomParams,
    rabi: float,
    geom: ArrayGeometry,
    pulse: PulseSpec,
    pad_factor: int = 4,
    hold_time: float = 0.0,
    hold_kappa: float = 0.0,
    vg: float | None = None,
) -> float:
    """Trapped energy fraction at the optimal control switch-off time.

    The transmitted spectrum E_in/M11 is transformed to the time domain and
    the energy in a sliding window of one transit time d/v_g (v_g from the
    analytic formula unless overridden) is maximized over the switch-off
    time.

    ``hold_time`` > 0 with ``hold_kappa`` > 0 applies an optional storage
    decay factor exp(-hold_time * gamma_sg * hold_kappa); by default no
    decay is applied.
    """
    # two-sided Gaussian tail of |E_in|^2 beyond the grid edge
    outside = math.erfc(pulse.span_sigmas)
    if outside > GRID_ENERGY_TOL:
        raise GridTooNarrow(
            f"{outside:.2e} of the pulse energy lies outside a "
            f"+-{pulse.span_sigmas} sigma grid (limit {GRID_ENERGY_TOL})"
        )
    if vg is None:
        vg = group_velocity_analytic(atom, rabi, geom).v_g
    tau = geom.d / vg

    g = pulse.grid()
    out = SampledGrid.regular(g.x[0], g.dx, g.y * amplitude_array(atom, rabi, g.x, geom))
    eta = trapped_energy(out, tau, pad_factor)
    if hold_time > 0.0 and hold_kappa > 0.0:
        eta *= math.exp(-hold_time * atom.gamma_sg * hold_kappa)
    return float(min(max(eta, 0.0), 1.0))


def solve_operating_point(
    atom: AtomParams,
    n: int,
    target_T: float = 0.99,
    target_vg_fraction: float = 0.01,
    target_pass: float = 0.98,
    line_speed: float = LINE_SPEED_DEFAULT,
    span_sigmas: float = 10.0,
    points: int = 2**14,
) -> StorageResult:
    """Run the full constraint chain and efficiency for one array size."""
    rabi = solve_rabi(atom, n, target_T)
    l = solve_separation(atom, n, rabi, target_vg_fraction, line_speed)
    geom = ArrayGeometry(n, l, line_speed)
    sigma = solve_sigma(atom, rabi, geom, target_pass, span_sigmas, points)
    pulse = PulseSpec(sigma, span_sigmas=span_sigmas, points=points)
    vg = group_velocity_analytic(atom, rabi, geom).v_g
    eta = storage_efficiency(atom, rabi, geom, pulse, vg=vg)
    return StorageResult(
        n=n,
        l=l,
        rabi=rabi,
        sigma=sigma,
        eta=eta,
        t0_free=single_pass_transmission(atom, rabi, n),
        t0_full=transmission(atom, DriveConfig(rabi, 0.0), geom),
        vg=vg,
        transit=geom.d / vg,
        clipped_fraction=1.0 - transmitted_fraction(atom, rabi, geom, pulse),
        error=None,
    )


def efficiency_sweep(
    atom: AtomParams,
    n_list,
    target_T: float = 0.99,
    target_vg_fraction: float = 0.01,
    target_pass: float = 0.98,
    line_speed: float = LINE_SPEED_DEFAULT,
    span_sigmas: float = 10.0,
    points: int = 2**14,
) -> list[StorageResult]:
    """Solve constraints and efficiency for each n; failures are recorded
    per entry and the sweep continues."""
    results = []
    for n in n_list:
        try:
            results.append(
                solve_operating_point(
                    atom,
                    int(n),
                    target_T=target_T,
                    target_vg_fraction=target_vg_fraction,
                    target_pass=target_pass,
                    line_speed=line_speed,
                    span_sigmas=span_sigmas,
                    points=points,
                )
            )
        except (EitArrayError, ValueError) as exc:
            results.append(StorageResult(n=int(n), error=str(exc)))
    return results


def write_sweep_csv(results, path, meta: dict | None = None) -> None:
    """CSV columns: n, eta, l_m, rabi_rad_s, sigma_rad_s, T0, vg_m_s, transit_s."""
    lines = []
    for key, value in (meta or {}).items():
        lines.append(f"# {key} = {value}")
    for res in results:
        if res.error is not None:
            lines.append(f"# error n={res.n}: {res.error}")
    lines.append("n,eta,l_m,rabi_rad_s,sigma_rad_s,T0,vg_m_s,transit_s")
    for res in results:
        if res.error is not None:
            continue
        lines.append(
            f"{res.n},{res.eta:.12g},{res.l:.12g},{res.rabi:.12g},"
            f"{res.sigma:.12g},{res.t0_full:.12g},{res.vg:.12g},{res.transit:.12g}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def sweep_to_json(results, meta: dict | None = None) -> str:
    """JSON mirror of the CSV, with full per-n diagnostics."""
    rows = []
    for res in results:
        rows.append(
            {
                "n": res.n,
                "eta": res.eta,
                "l_m": res.l,
                "rabi_rad_s": res.rabi,
                "sigma_rad_s": res.sigma,
                "T0": res.t0_full,
                "T0_scattering_free": res.t0_free,
                "vg_m_s": res.vg,
                "transit_s": res.transit,
                "clipped_fraction": res.clipped_fraction,
                "error": res.error,
            }
        )
    return json.dumps({"meta": meta or {}, "results": rows}, indent=2, sort_keys=True)

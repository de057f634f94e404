"""Scattering of a weak signal field by a periodic 1D array of driven
three-level artificial atoms, via 2x2 transfer matrices.

Each atom sits on a transmission line and scatters right/left-moving field
amplitudes.  A strong control field of Rabi modulus |Omega| on the e-s
transition opens a transparency window for the signal, which is detuned by
``delta`` from the e-g transition.  The single-atom reflection coefficient is

    r(delta) = gamma_eg / (2*(gamma_e - i*delta)
                           + |Omega|^2 / (2*(gamma_s - i*delta)))

with gamma_e = (gamma_eg + gamma_es)/2 and gamma_s = gamma_sg/2.  An array of
n atoms with spacing l responds through the ordered product of atom matrices
and free-propagation phases phi = l*omega_s/c; its upper-left element M11 is
also available in closed form through the two eigenmodes of the unit cell,

    M11 = G1*F1^n + G2*F2^n,   F1*F2 = 1,

which is the numerically stable route for large n.  The transmitted field
amplitude is 1/M11 and the power transmission T = |1/M11|^2.

Rate conventions: decay rates and Rabi frequencies quoted in "MHz" are
ambiguous; ``rate_convention="angular"`` reads them as 1e6 rad/s while
``"ordinary"`` multiplies by 2*pi.  Transition frequencies are always quoted
as ordinary frequencies (GHz) and converted to rad/s internally.

Everything here is a pure function of immutable parameter records, so grids
of detunings may be evaluated concurrently by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import EitArrayError

LINE_SPEED_DEFAULT = 1.2e8  # m/s, microwave propagation speed on the line
RATE_CONVENTIONS = ("angular", "ordinary")
DEGENERATE_B_TOL = 1e-12
SINGULAR_ATOM_TOL = 1e-14


class SingularAtom(EitArrayError):
    """Reflection coefficient too close to 1; the boundary matrix blows up."""


class DegenerateB(EitArrayError):
    """Unit-cell eigenmode splitting vanished (e.g. half-wave spacing);
    fall back to the explicit chain product."""


def quoted_rate(value_mhz: float, rate_convention: str = "angular") -> float:
    """Convert a rate quoted as a bare "MHz" numeral to rad/s."""
    if rate_convention not in RATE_CONVENTIONS:
        raise ValueError(f"unknown rate convention {rate_convention!r}")
    scale = 1e6 if rate_convention == "angular" else 2 * math.pi * 1e6
    return value_mhz * scale


def quoted_frequency_ghz(value_ghz: float) -> float:
    """Convert an ordinary frequency in GHz to an angular frequency in rad/s."""
    return 2 * math.pi * value_ghz * 1e9


@dataclass(frozen=True)
class AtomParams:
    """Decay rates and transition frequencies of one three-level atom.

    All rates and frequencies are angular (rad/s).  ``gamma_eg``/``gamma_es``
    are the decay rates of the excited state into g and s, ``gamma_sg`` the
    decay of the metastable state.
    """

    gamma_eg: float
    gamma_es: float
    gamma_sg: float
    omega_eg: float
    omega_es: float

    def __post_init__(self):
        for name in ("gamma_eg", "gamma_es", "gamma_sg"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (self.omega_eg > self.omega_es > 0):
            raise ValueError("need omega_eg > omega_es > 0")

    @property
    def gamma_e(self) -> float:
        """Total coherence decay rate of the excited state."""
        return (self.gamma_eg + self.gamma_es) / 2

    @property
    def gamma_s(self) -> float:
        """Coherence decay rate of the metastable state."""
        return self.gamma_sg / 2


def fluxonium_atom(
    rate_convention: str = "angular",
    gamma_sg_mhz: float = 0.167,
    gamma_eg_ratio: float = 173.0,
    gamma_es_ratio: float = 40.0,
    omega_eg_ghz: float = 10.4,
    omega_es_ghz: float = 6.99,
) -> AtomParams:
    """Default fluxonium parameter set used throughout the examples."""
    gamma_sg = quoted_rate(gamma_sg_mhz, rate_convention)
    return AtomParams(
        gamma_eg=gamma_eg_ratio * gamma_sg,
        gamma_es=gamma_es_ratio * gamma_sg,
        gamma_sg=gamma_sg,
        omega_eg=quoted_frequency_ghz(omega_eg_ghz),
        omega_es=quoted_frequency_ghz(omega_es_ghz),
    )


@dataclass(frozen=True)
class DriveConfig:
    """Control-field Rabi modulus |Omega| and signal detuning delta (rad/s)."""

    rabi_modulus: float
    detuning: float = 0.0

    def __post_init__(self):
        if self.rabi_modulus < 0:
            raise ValueError("rabi_modulus must be >= 0")


@dataclass(frozen=True)
class ArrayGeometry:
    """Periodic array of ``n`` atoms with spacing ``l`` on a line of speed ``c``.

    The medium length is d = (n-1)*l; a signal of angular frequency omega_s
    picks up the phase phi = l*omega_s/c between adjacent atoms.
    """

    n: int
    l: float
    c: float = LINE_SPEED_DEFAULT

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one atom")
        if self.l < 0:
            raise ValueError("spacing must be >= 0")
        if self.c <= 0:
            raise ValueError("line speed must be positive")

    @property
    def d(self) -> float:
        return (self.n - 1) * self.l

    def phase(self, omega_s):
        """Inter-atom propagation phase phi = l*omega_s/c."""
        return self.l * omega_s / self.c


def transition_wavelength(atom: AtomParams, line_speed: float = LINE_SPEED_DEFAULT) -> float:
    """Signal wavelength on the line at the e-g transition frequency."""
    return 2 * math.pi * line_speed / atom.omega_eg


@dataclass(frozen=True)
class FieldPair:
    """Right- and left-moving field amplitudes at one point on the line."""

    right: complex
    left: complex


@dataclass(frozen=True)
class TransferMatrix:
    """2x2 complex map between (right, left) field pairs across an element."""

    m11: complex
    m12: complex
    m21: complex
    m22: complex

    @classmethod
    def identity(cls) -> "TransferMatrix":
        return cls(1.0 + 0j, 0j, 0j, 1.0 + 0j)

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        return TransferMatrix(
            self.m11 * other.m11 + self.m12 * other.m21,
            self.m11 * other.m12 + self.m12 * other.m22,
            self.m21 * other.m11 + self.m22 * other.m21,
            self.m21 * other.m12 + self.m22 * other.m22,
        )

    def apply(self, fields: FieldPair) -> FieldPair:
        return FieldPair(
            right=self.m11 * fields.right + self.m12 * fields.left,
            left=self.m21 * fields.right + self.m22 * fields.left,
        )


def _reflection(atom: AtomParams, rabi: float, delta):
    """Vector-friendly single-atom reflection coefficient r(delta)."""
    denom = 2 * (atom.gamma_e - 1j * np.asarray(delta, dtype=complex))
    denom = denom + rabi**2 / (2 * (atom.gamma_s - 1j * np.asarray(delta, dtype=complex)))
    return atom.gamma_eg / denom


def reflection_coeff(atom: AtomParams, drive: DriveConfig) -> complex:
    """Reflection coefficient of one driven atom at the given detuning.

    With the control off and on resonance this reduces to the branching
    ratio gamma_eg/(gamma_eg + gamma_es); strong driving or large detuning
    send it to zero.  The denominator never vanishes for positive rates.
    """
    return complex(_reflection(atom, drive.rabi_modulus, drive.detuning))


def single_atom_matrix(r: complex) -> TransferMatrix:
    """Boundary transfer matrix of one atom with reflection coefficient r.

    Maps the output-side pair (E'_R, E'_L) to the input-side pair (E_R, E_L):
    M = [[1, -r], [r, 1-2r]] / (1-r).  For a purely transmitting element
    (r = 0) this is the identity; the transmission amplitude with no
    left-moving input is 1 - r.
    """
    if abs(1 - r) < SINGULAR_ATOM_TOL:
        raise SingularAtom(f"|1 - r| = {abs(1 - r):.3e} is below {SINGULAR_ATOM_TOL}")
    s = 1.0 / (1.0 - r)
    return TransferMatrix(s, -r * s, r * s, (1 - 2 * r) * s)


def propagation_matrix(geom: ArrayGeometry, omega_s: float) -> TransferMatrix:
    """Free propagation between adjacent atoms: diag(e^{-i phi}, e^{+i phi}).

    The sign convention is fixed by requiring the chain product to agree
    with the closed-form array response.
    """
    phi = geom.phase(omega_s)
    return TransferMatrix(np.exp(-1j * phi), 0j, 0j, np.exp(1j * phi))


def chain_response(
    atom: AtomParams,
    drive: DriveConfig,
    geom: ArrayGeometry,
    gap_phases: Sequence[float] | None = None,
) -> TransferMatrix:
    """Array response by explicit matrix product: M = A (P A)^(n-1).

    ``gap_phases`` optionally overrides the propagation phase of each of the
    n-1 gaps (ordered from the input side), which permits aperiodic spacings;
    by default every gap uses phi = l*omega_s/c at omega_s = omega_eg + delta.
    """
    r = reflection_coeff(atom, drive)
    A = single_atom_matrix(r)
    if geom.n == 1:
        return A
    if gap_phases is None:
        phi = geom.phase(atom.omega_eg + drive.detuning)
        gap_phases = [phi] * (geom.n - 1)
    elif len(gap_phases) != geom.n - 1:
        raise ValueError(f"need {geom.n - 1} gap phases, got {len(gap_phases)}")
    M = A
    for phi in gap_phases:
        P = TransferMatrix(np.exp(-1j * phi), 0j, 0j, np.exp(1j * phi))
        M = M @ (P @ A)
    return M


class UnitCellModes(NamedTuple):
    """Eigen-decomposition of the array response: M11 = g1*f1^n + g2*f2^n.

    f1, f2 are the per-cell growth factors (f1*f2 = 1) and g1, g2 the
    boundary weights; ``b`` is the mode-splitting square root whose sign
    fixes the (f1, g1) <-> (f2, g2) assignment.  In canonical order
    |f1| <= |f2|, so f2 carries the attenuation for a lossy array.
    """

    f1: complex
    f2: complex
    g1: complex
    g2: complex
    b: complex


def _cell_invariants(r, phi):
    v = np.exp(2j * np.asarray(phi, dtype=complex))
    a_plus = v * (1 - 2 * r) - 1
    a_minus = -v * (1 - 2 * r) - 1
    b = np.sqrt((v - 1) * (v * (1 - 2 * r) ** 2 - 1))
    return a_plus, a_minus, b


def unit_cell_modes(r: complex, phi: float, branch_ref: complex | None = None) -> UnitCellModes:
    """Growth factors and weights of the two array eigenmodes.

    Flipping the sign of ``b`` swaps the two (f, g) pairs and leaves M11
    unchanged.  Without ``branch_ref`` the sign is chosen canonically
    (|f1| <= |f2|, ties broken toward Im f1 >= 0); with it, the sign closest
    to the reference is kept, which preserves mode identity along a
    parameter path (needed when differentiating the modes).
    """
    a_plus, a_minus, b = _cell_invariants(complex(r), float(phi))
    if abs(b) < DEGENERATE_B_TOL:
        raise DegenerateB(f"|B| = {abs(b):.3e}; half-wave/zero-spacing degeneracy")
    if branch_ref is not None:
        if abs(b - branch_ref) > abs(-b - branch_ref):
            b = -b
    exp_phi = np.exp(1j * phi)
    g1 = (a_plus + b) / (2 * b / exp_phi)
    g2 = -(a_plus - b) / (2 * b / exp_phi)
    f1 = (a_minus + b) / (2 * exp_phi * (r - 1))
    f2 = (a_minus - b) / (2 * exp_phi * (r - 1))
    if branch_ref is None:
        swap = abs(f1) > abs(f2) or (abs(f1) == abs(f2) and f1.imag < f2.imag)
        if swap:
            f1, f2, g1, g2, b = f2, f1, g2, g1, -b
    return UnitCellModes(complex(f1), complex(f2), complex(g1), complex(g2), complex(b))


def _closed_m11_raw(r, phi, n: int, branch_sign: int = +1):
    """Closed-form M11; returns (m11, b) without degeneracy checks."""
    a_plus, a_minus, b = _cell_invariants(r, phi)
    b = branch_sign * b
    num = (a_plus + b) * (a_minus + b) ** n - (a_plus - b) * (a_minus - b) ** n
    den = 2.0 ** (n + 1) * np.exp(1j * (n - 1) * np.asarray(phi)) * b * (r - 1) ** n
    return num / den, b


def closed_form_m11(r: complex, phi: float, n: int, branch_sign: int = +1) -> complex:
    """Closed-form upper-left array-response element for n atoms.

    Either sign of the square-root branch gives the same value
    (``branch_sign`` exists as a numerical self-check knob).  Raises
    DegenerateB near half-wave or zero spacing, where the caller should use
    :func:`chain_response` instead.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    _, _, b = _cell_invariants(complex(r), float(phi))
    if abs(b) < DEGENERATE_B_TOL:
        raise DegenerateB(f"|B| = {abs(b):.3e}; fall back to chain_response")
    m11, _ = _closed_m11_raw(complex(r), float(phi), n, branch_sign)
    return complex(m11)


def response_m11(atom: AtomParams, drive: DriveConfig, geom: ArrayGeometry) -> complex:
    """M11 of the full array, closed form with chain fallback."""
    r = reflection_coeff(atom, drive)
    phi = geom.phase(atom.omega_eg + drive.detuning)
    try:
        return closed_form_m11(r, phi, geom.n)
    except DegenerateB:
        return chain_response(atom, drive, geom).m11


def amplitude_array(atom: AtomParams, rabi: float, deltas: np.ndarray, geom: ArrayGeometry) -> np.ndarray:
    """Transmitted amplitude 1/M11 on a detuning grid (vectorized).

    The propagation phase is evaluated at the full signal frequency
    omega_eg + delta for every point.  Points where the closed form is
    degenerate are recomputed through the chain product.
    """
    deltas = np.asarray(deltas, dtype=float)
    r = _reflection(atom, rabi, deltas)
    phi = geom.phase(atom.omega_eg + deltas)
    _, _, b = _cell_invariants(r, phi)
    good = np.abs(b) >= DEGENERATE_B_TOL
    m11 = np.empty_like(r)
    if np.any(good):
        m11[good], _ = _closed_m11_raw(r[good], phi[good], geom.n)
    for i in np.nonzero(~good)[0]:
        m11[i] = chain_response(atom, DriveConfig(rabi, float(deltas[i])), geom).m11
    return 1.0 / m11


def transmission(atom: AtomParams, drive: DriveConfig, geom: ArrayGeometry) -> float:
    """Power transmission T = |1/M11|^2 of the array."""
    return float(abs(1.0 / response_m11(atom, drive, geom)) ** 2)


def log_abs_m11(atom: AtomParams, drive: DriveConfig, geom: ArrayGeometry) -> float:
    """ln|M11| computed without overflow, for opaque media of any size.

    Uses the eigenmode logs (ln|M11| = ln|g2| + n ln|f2| + small correction)
    and falls back to a scaled chain product at the degenerate spacings.
    """
    r = reflection_coeff(atom, drive)
    phi = geom.phase(atom.omega_eg + drive.detuning)
    n = geom.n
    try:
        modes = unit_cell_modes(r, phi)
    except DegenerateB:
        return _log_abs_m11_chain(atom, drive, geom)
    ratio = (modes.g1 / modes.g2) * (modes.f1 / modes.f2) ** n
    return float(np.log(abs(modes.g2)) + n * np.log(abs(modes.f2)) + np.log(abs(1 + ratio)))


def _log_abs_m11_chain(atom: AtomParams, drive: DriveConfig, geom: ArrayGeometry) -> float:
    """Chain product with per-step renormalization; tracks log magnitude."""
    r = reflection_coeff(atom, drive)
    A = single_atom_matrix(r)
    phi = geom.phase(atom.omega_eg + drive.detuning)
    P = TransferMatrix(np.exp(-1j * phi), 0j, 0j, np.exp(1j * phi))
    cell = P @ A
    M = A
    log_scale = 0.0
    for _ in range(geom.n - 1):
        M = M @ cell
        norm = max(abs(M.m11), abs(M.m12), abs(M.m21), abs(M.m22))
        if norm > 1e100:
            M = TransferMatrix(M.m11 / norm, M.m12 / norm, M.m21 / norm, M.m22 / norm)
            log_scale += math.log(norm)
    return float(np.log(abs(M.m11)) + log_scale)


def single_pass_m11_inv(atom: AtomParams, drive: DriveConfig, geom: ArrayGeometry) -> complex:
    """Transmitted amplitude with inter-atom scattering neglected.

    Each atom multiplies the forward amplitude by (1 - r) and each gap adds
    its free phase: 1/M11 = (1-r)^n e^{i (n-1) phi}.
    """
    r = reflection_coeff(atom, drive)
    phi = geom.phase(atom.omega_eg + drive.detuning)
    return complex((1 - r) ** geom.n * np.exp(1j * (geom.n - 1) * phi))


def single_pass_transmission(atom: AtomParams, rabi: float, n: int, delta: float = 0.0) -> float:
    """Scattering-free power transmission T = exp(-2 n Re r(delta))."""
    r = complex(_reflection(atom, rabi, delta))
    return float(np.exp(-2 * n * r.real))

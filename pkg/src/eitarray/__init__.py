"""Transfer-matrix simulator for microwave transparency, slow light and
pulse storage in a periodic 1D array of three-level superconducting atoms."""

from .errors import EitArrayError
from .numerics import SampledGrid, derivative, find_root, integrate, linear_fit, spectrum_to_time, time_to_spectrum
from .scattering import (
    ArrayGeometry,
    AtomParams,
    DriveConfig,
    FieldPair,
    TransferMatrix,
    chain_response,
    closed_form_m11,
    fluxonium_atom,
    propagation_matrix,
    quoted_frequency_ghz,
    quoted_rate,
    reflection_coeff,
    response_m11,
    single_atom_matrix,
    single_pass_transmission,
    transition_wavelength,
    transmission,
    unit_cell_modes,
)
from .spectra import DepthScan, SpectralResponse, beer_scan, half_wave_depth, optical_depth, sweep_transmission
from .dispersion import (
    DecompositionCoeffs,
    DispersionResult,
    WindowResult,
    decompose_window,
    group_velocity_analytic,
    group_velocity_numeric,
    wavenumber,
    window_width_analytic,
    window_width_numeric,
)
from .storage import (
    PulseSpec,
    StorageResult,
    efficiency_sweep,
    solve_operating_point,
    solve_rabi,
    solve_separation,
    solve_sigma,
    storage_efficiency,
    transmitted_fraction,
    trapped_energy,
)

__version__ = "0.1.0"

__all__ = [
    "EitArrayError",
    "SampledGrid",
    "find_root",
    "derivative",
    "linear_fit",
    "spectrum_to_time",
    "time_to_spectrum",
    "integrate",
    "AtomParams",
    "DriveConfig",
    "ArrayGeometry",
    "TransferMatrix",
    "FieldPair",
    "fluxonium_atom",
    "quoted_rate",
    "quoted_frequency_ghz",
    "transition_wavelength",
    "reflection_coeff",
    "single_atom_matrix",
    "propagation_matrix",
    "chain_response",
    "closed_form_m11",
    "response_m11",
    "unit_cell_modes",
    "transmission",
    "single_pass_transmission",
    "SpectralResponse",
    "DepthScan",
    "sweep_transmission",
    "optical_depth",
    "beer_scan",
    "half_wave_depth",
    "DispersionResult",
    "WindowResult",
    "DecompositionCoeffs",
    "wavenumber",
    "group_velocity_numeric",
    "group_velocity_analytic",
    "window_width_numeric",
    "window_width_analytic",
    "decompose_window",
    "PulseSpec",
    "StorageResult",
    "solve_rabi",
    "solve_separation",
    "solve_sigma",
    "transmitted_fraction",
    "trapped_energy",
    "storage_efficiency",
    "solve_operating_point",
    "efficiency_sweep",
]

"""Generic numerical utilities: bracketed root finding, finite differences,
least squares, and an energy-preserving spectrum/time Fourier pair.

No physics lives here.  Everything is pure and stateless, so all functions
are safe to call from any number of concurrent callers.

The Fourier conventions are pinned once and for all (kernel, 2*pi placement,
grid layout) so that results are reproducible to the tolerances used in the
test suite:

    e(t_j) = dw / sqrt(2*pi) * sum_k E(w_k) exp(-i w_k t_j)

with t_j = j*dt on a symmetric grid, dt = 2*pi/(N*dw).  Discrete Parseval
holds exactly: sum |E|^2 dw == sum |e|^2 dt.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import EitArrayError

MAX_ROOT_ITERATIONS = 200


class NoSignChange(EitArrayError):
    """Root bracket does not straddle a sign change."""


class MaxIterations(EitArrayError):
    """Root finder failed to converge within the iteration budget."""


class DegenerateInput(EitArrayError):
    """Input data carries no information for the requested fit."""


class NonUniformGrid(EitArrayError):
    """Operation requires a uniformly spaced grid."""


class NonPowerOfTwo(EitArrayError):
    """Operation requires a power-of-two number of samples."""


@dataclass(frozen=True)
class SampledGrid:
    """Samples y(x) on a strictly increasing axis.

    ``uniform`` grids should be built with :meth:`regular`, which guarantees
    exact spacing by construction (x = x0 + k*dx).  ``from_points`` detects
    uniformity up to floating-point representation noise of the axis.
    """

    x: np.ndarray
    y: np.ndarray
    uniform: bool
    dx: float | None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=complex)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.ndim != 1 or y.shape != x.shape:
            raise ValueError("x and y must be 1-d arrays of equal length")
        if len(x) >= 2 and not np.all(np.diff(x) > 0):
            raise ValueError("x must be strictly increasing")
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite grid positions")
        if not np.all(np.isfinite(y.real)) or not np.all(np.isfinite(y.imag)):
            raise ValueError("non-finite sample values")

    def __len__(self) -> int:
        return len(self.x)

    @classmethod
    def regular(cls, x0: float, dx: float, y: np.ndarray) -> "SampledGrid":
        """Uniform grid x = x0 + k*dx, exact by construction."""
        y = np.asarray(y, dtype=complex)
        x = x0 + np.arange(len(y)) * dx
        return cls(x=x, y=y, uniform=True, dx=float(dx))

    @classmethod
    def from_points(cls, x: np.ndarray, y: np.ndarray) -> "SampledGrid":
        x = np.asarray(x, dtype=float)
        dx = None
        uniform = False
        if len(x) >= 2:
            dx = (x[-1] - x[0]) / (len(x) - 1)
            # representation noise of x itself can reach a few ulp(|x|)
            tol = max(1e-12 * abs(dx), 8 * np.finfo(float).eps * np.abs(x).max())
            uniform = bool(np.max(np.abs(np.diff(x) - dx)) <= tol)
            if not uniform:
                dx = None
        return cls(x=x, y=np.asarray(y, dtype=complex), uniform=uniform, dx=dx)


def find_root(f: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """Bracketed root of a continuous scalar function (Brent's method).

    Requires f(lo)*f(hi) <= 0 and tol > 0; the result always lies inside
    [lo, hi] with the final interval width below ``tol``.

    Raises NoSignChange when the bracket is invalid and MaxIterations when
    200 iterations are not enough.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if lo >= hi:
        raise ValueError("need lo < hi")
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise NoSignChange(f"f({lo}) = {flo} and f({hi}) = {fhi} have the same sign")
    root, info = brentq(
        f,
        lo,
        hi,
        xtol=tol,
        rtol=4 * np.finfo(float).eps,
        maxiter=MAX_ROOT_ITERATIONS,
        full_output=True,
        disp=False,
    )
    if not info.converged:
        raise MaxIterations(f"no convergence within {MAX_ROOT_ITERATIONS} iterations")
    return float(root)


def derivative(f: Callable[[float], complex], x0: float, order: int, h: float) -> complex:
    """Central finite difference of first or second order, O(h^2) accurate.

    ``f`` may return complex values; it must be evaluable on [x0-h, x0+h].
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if order == 1:
        return (f(x0 + h) - f(x0 - h)) / (2 * h)
    if order == 2:
        return (f(x0 + h) - 2 * f(x0) + f(x0 - h)) / h**2
    raise ValueError("order must be 1 or 2")


def linear_fit(xs, ys) -> tuple[float, float, float]:
    """Ordinary least squares line fit: returns (slope, intercept, r_squared).

    r_squared is defined as 1 - SS_res/SS_tot and clipped to [0, 1]; a
    perfect fit to constant data counts as r_squared = 1.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size < 2 or x.size != y.size:
        raise ValueError("need at least two (x, y) pairs")
    if np.ptp(x) == 0:
        raise DegenerateInput("all x values are identical")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res <= 1e-24 * max(1.0, float(np.sum(y**2))) else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), float(min(max(r2, 0.0), 1.0))


def _require_transformable(grid: SampledGrid) -> int:
    if not grid.uniform or grid.dx is None:
        raise NonUniformGrid("spectrum/time transforms need a uniform grid")
    n = len(grid)
    if n < 2 or (n & (n - 1)) != 0:
        raise NonPowerOfTwo(f"got {n} samples, need a power of two")
    return n


def spectrum_to_time(spec: SampledGrid) -> SampledGrid:
    """Transform a spectrum on a uniform angular-frequency grid to time.

    Uses the e^{-i w t} kernel, so a linear spectral phase e^{i w t0}
    shifts the signal to later times by t0 (a transmission phase e^{i k d}
    therefore delays the pulse).  Energy is preserved exactly in the
    discrete Parseval sense.
    """
    n = _require_transformable(spec)
    dw = spec.dx
    dt = 2 * np.pi / (n * dw)
    t = (np.arange(n) - n // 2) * dt
    phase = np.exp(-1j * spec.x[0] * t)
    y_t = np.fft.fftshift(np.fft.fft(spec.y)) * (dw / np.sqrt(2 * np.pi)) * phase
    return SampledGrid.regular(t[0], dt, y_t)


def time_to_spectrum(signal: SampledGrid, w0: float | None = None) -> SampledGrid:
    """Inverse of :func:`spectrum_to_time`.

    ``w0`` is the first frequency of the target spectral grid; by default
    the grid is symmetric about zero.  ``time_to_spectrum(spectrum_to_time(g),
    w0=g.x[0])`` recovers ``g`` to round-off.
    """
    n = _require_transformable(signal)
    dt = signal.dx
    dw = 2 * np.pi / (n * dt)
    if w0 is None:
        w0 = -(n // 2) * dw
    y = np.fft.ifft(np.fft.ifftshift(signal.y * np.exp(1j * w0 * signal.x)))
    y *= np.sqrt(2 * np.pi) / dw
    return SampledGrid.regular(w0, dw, y)


def integrate(grid: SampledGrid) -> float:
    """Trapezoidal integral of the sample power |y|^2 over the grid."""
    if len(grid) < 2:
        raise ValueError("need at least two samples")
    return float(np.trapezoid(np.abs(grid.y) ** 2, grid.x))

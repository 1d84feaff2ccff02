"""Discrete Fourier machinery on the uniform circle grid.

Everything downstream (dynamics, diagnostics, reconstruction) is built from
four primitives defined here: the periodic Hilbert transform, filtered
spectral differentiation, analytic (holomorphic-trace) extension of real
boundary data, and recovery of the interface position from the reciprocal
map derivative.

Conventions
-----------
* Grid nodes are ``theta_j = j*h``, ``h = 2*pi/N``, with ``N`` a power of two.
* Fourier coefficients use the analytic normalization
  ``c_k = (1/N) * sum_j f_j exp(-i k theta_j)``, i.e. ``numpy.fft.fft/N``.
* Analytic (one-sided) traces keep only modes ``k = 0 .. N/2-1``; the
  Nyquist mode is annihilated by every operator (the sign of its symbol is
  ambiguous and all one-sided sums stop at ``N/2-1``).
* All operators are pure functions of their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FilterSpec",
    "SpectralGrid",
    "BoundaryTrace",
    "GridMismatchError",
    "SingularReconstructionError",
    "hilbert",
    "filtered_derivative",
    "analytic_extension",
    "analytic_projection",
    "reconstruct_Z",
    "dtheta",
    "dw",
    "tail_energy_fraction",
]


class GridMismatchError(ValueError):
    """Sample array length does not match the grid."""


class SingularReconstructionError(ValueError):
    """1/Q vanished at a node; interface recovery is not possible."""

    def __init__(self, index: int, value: complex):
        self.index = index
        self.value = value
        super().__init__(
            f"reconstruction input vanishes at node {index} (|q|={abs(value):.3e})"
        )


@dataclass(frozen=True)
class FilterSpec:
    """Exponential high-mode filter ``rho(xi) = exp(-strength*(xi/pi)**order)``.

    The default parameters damp only the top ~15% of the spectrum;
    ``rho(0) = 1`` and ``rho(pi) = exp(-strength)``.
    """

    strength: float = 10.0
    order: int = 15

    def __post_init__(self):
        if self.strength < 0:
            raise ValueError("filter strength must be >= 0")
        if self.order < 1:
            raise ValueError("filter order must be >= 1")

    def rho(self, xi):
        """Evaluate the filter response at |scaled wavenumber| ``xi = h*k``."""
        xi = np.abs(np.asarray(xi, dtype=float))
        return np.exp(-self.strength * (xi / np.pi) ** self.order)


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform N-point grid on the circle with its filter.

    The grid itself is never deformed; grid concentration is achieved by
    composing the conformal map with a disk automorphism (see `maps`).
    """

    N: int
    filter: FilterSpec = field(default_factory=FilterSpec)

    def __post_init__(self):
        n = self.N
        if n < 8 or (n & (n - 1)) != 0:
            raise ValueError(f"N must be a power of two >= 8, got {n}")

    @property
    def h(self) -> float:
        return 2.0 * np.pi / self.N

    @property
    def theta(self) -> np.ndarray:
        return self.h * np.arange(self.N)

    @property
    def nodes(self) -> np.ndarray:
        """Unit-circle nodes ``exp(i*theta_j)``."""
        return np.exp(1j * self.theta)

    # --- precomputed symbol tables (cached lazily, keyed on id) -----------

    def _symbols(self):
        cache = _SYMBOL_CACHE.get((self.N, self.filter))
        if cache is None:
            n = self.N
            kr = np.arange(n // 2 + 1)              # rfft bins 0..N/2
            rho_r = self.filter.rho(self.h * kr)
            rho_r[-1] = 0.0                          # Nyquist annihilated
            kc = np.arange(n // 2)                   # one-sided bins 0..N/2-1
            rho_c = self.filter.rho(self.h * kc)
            cache = (kr, rho_r, kc, rho_c)
            _SYMBOL_CACHE[(self.N, self.filter)] = cache
        return cache

    def check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != (self.N,):
            raise GridMismatchError(
                f"expected {self.N} samples, got shape {x.shape}"
            )
        return x


_SYMBOL_CACHE: dict = {}


class BoundaryTrace:
    """N samples of a complex boundary function plus its DFT coefficients.

    Physical values and spectral coefficients are synchronized lazily: a
    trace constructed from one representation computes the other on first
    access and is treated as immutable afterwards.  The ``analytic`` flag
    asserts that all negative-frequency modes vanish (the trace extends
    holomorphically into the disk).
    """

    __slots__ = ("grid", "_values", "_coeffs", "analytic")

    def __init__(self, grid: SpectralGrid, values=None, coeffs=None,
                 analytic: bool = False):
        if values is None and coeffs is None:
            raise ValueError("need values or coeffs")
        self.grid = grid
        self._values = None if values is None else np.asarray(
            grid.check(values), dtype=complex)
        self._coeffs = None if coeffs is None else np.asarray(
            grid.check(coeffs), dtype=complex)
        self.analytic = analytic

    @classmethod
    def from_values(cls, grid, values, analytic=False):
        return cls(grid, values=values, analytic=analytic)

    @classmethod
    def from_coeffs(cls, grid, coeffs, analytic=False):
        return cls(grid, coeffs=coeffs, analytic=analytic)

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = np.fft.ifft(self._coeffs) * self.grid.N
        return self._values

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            self._coeffs = np.fft.fft(self._values) / self.grid.N
        return self._coeffs

    def negative_mode_ratio(self) -> float:
        """Max |c_k| over the negative-frequency half, relative to max |c_k|."""
        c = self.coeffs
        n = self.grid.N
        scale = np.abs(c).max()
        if scale == 0.0:
            return 0.0
        return float(np.abs(c[n // 2:]).max() / scale)

    def assert_analytic(self, tol: float = 1e-12):
        ratio = self.negative_mode_ratio()
        if ratio > tol:
            raise ValueError(
                f"trace is not analytic: negative-mode ratio {ratio:.3e} > {tol:.1e}"
            )


# ---------------------------------------------------------------------------
# real-sample operators
# ---------------------------------------------------------------------------

def hilbert(x: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Periodic Hilbert transform, Fourier symbol ``-i*sgn(k)``.

    The mean (k=0) and Nyquist modes map to zero.
    """
    x = grid.check(x)
    xh = np.fft.rfft(np.real(x))
    xh[0] = 0.0
    xh[-1] = 0.0
    xh[1:-1] *= -1j
    return np.fft.irfft(xh, n=grid.N)


def dtheta(x: np.ndarray, grid: SpectralGrid, filtered: bool = True) -> np.ndarray:
    """Spectral theta-derivative of real samples, optionally filtered."""
    x = grid.check(x)
    kr, rho_r, _, _ = grid._symbols()
    xh = np.fft.rfft(np.real(x))
    sym = 1j * kr
    if filtered:
        sym = sym * rho_r
    else:
        sym = sym.copy()
        sym[-1] = 0.0                                # derivative of Nyquist cos-mode
    return np.fft.irfft(sym * xh, n=grid.N)


def filtered_derivative(x: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Filtered spectral derivative ``IDFT(i k rho(h|k|) x_k)``.

    Real input returns real output.  Complex input is differentiated over
    the full two-sided spectrum with ``rho`` evaluated at ``|k|``; the
    Nyquist mode is annihilated.
    """
    x = grid.check(x)
    if np.isrealobj(x):
        return dtheta(x, grid, filtered=True)
    n = grid.N
    k = np.fft.fftfreq(n, d=1.0 / n)
    sym = 1j * k * grid.filter.rho(grid.h * np.abs(k))
    sym[n // 2] = 0.0
    return np.fft.ifft(sym * np.fft.fft(x))


def analytic_extension(a: np.ndarray, grid: SpectralGrid) -> BoundaryTrace:
    """Trace of ``(I + iH) a`` for real samples ``a``.

    Coefficient rule: ``G_0 = a_0``, ``G_k = 2 a_k`` for ``k > 0`` and
    ``G_k = 0`` for ``k < 0``, so the real part of the result equals ``a``
    (up to the dropped Nyquist mode).
    """
    a = grid.check(a)
    n = grid.N
    ah = np.fft.rfft(np.real(a)) / n
    c = np.zeros(n, dtype=complex)
    c[0] = ah[0].real
    c[1:n // 2] = 2.0 * ah[1:n // 2]
    return BoundaryTrace.from_coeffs(grid, c, analytic=True)


def analytic_projection(values: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Zero all negative-frequency (and Nyquist) modes of complex samples."""
    values = grid.check(values)
    c = np.fft.fft(values)
    c[grid.N // 2:] = 0.0
    return np.fft.ifft(c)


# ---------------------------------------------------------------------------
# analytic-trace operators
# ---------------------------------------------------------------------------

def _onesided_coeffs(values: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """One-sided coefficients c_k, k = 0..N/2-1, of complex samples."""
    c = np.fft.fft(values) / grid.N
    return c[: grid.N // 2]


def _synth(c_onesided: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    full = np.zeros(grid.N, dtype=complex)
    full[: grid.N // 2] = c_onesided
    return np.fft.ifft(full) * grid.N


def dw(values: np.ndarray, grid: SpectralGrid, filtered: bool = True) -> np.ndarray:
    """d/dw of an analytic trace: modal rule ``sum_k k c_k e^{i(k-1)theta}``.

    One pass with the filter; this is the discrete derivative used in the
    reciprocal-variable evolution equations.
    """
    c = _onesided_coeffs(grid.check(values), grid)
    _, _, kc, rho_c = grid._symbols()
    fac = kc * (rho_c if filtered else 1.0)
    out = np.zeros(grid.N // 2, dtype=complex)
    out[:-1] = (fac * c)[1:]
    return _synth(out, grid)


def dtheta_analytic(values: np.ndarray, grid: SpectralGrid,
                    filtered: bool = True) -> np.ndarray:
    """Spectral theta-derivative of an analytic complex trace."""
    c = _onesided_coeffs(grid.check(values), grid)
    _, _, kc, rho_c = grid._symbols()
    fac = 1j * kc * (rho_c if filtered else 1.0)
    return _synth(fac * c, grid)


def reconstruct_Z(q: BoundaryTrace, grid: SpectralGrid) -> BoundaryTrace:
    """Recover the interface trace from ``Q = 1/Z_w``.

    Integrates the one-sided expansion of ``1/Q`` mode by mode:
    ``Z_j = sum_{k=1}^{N/2-1} (c_{k-1}/k) e^{i k theta_j}`` with the
    normalization ``Z(0) = 0``; any center offset is the caller's business.
    """
    qv = grid.check(q.values)
    amin = int(np.argmin(np.abs(qv)))
    if np.abs(qv[amin]) == 0.0:
        raise SingularReconstructionError(amin, qv[amin])
    c = _onesided_coeffs(1.0 / qv, grid)
    n2 = grid.N // 2
    z = np.zeros(n2, dtype=complex)
    k = np.arange(1, n2)
    z[1:] = c[:-1] / k
    return BoundaryTrace.from_values(grid, _synth(z, grid), analytic=True)


def tail_energy_fraction(values: np.ndarray, grid: SpectralGrid,
                         tail_start: float = 0.75) -> float:
    """Fraction of spectral energy in the top part of the retained band.

    ``tail_start`` is the fraction of the one-sided band (k < N/2) at which
    the tail begins.  Growth of this quantity signals aliasing into
    unresolved modes, the practical proxy for loss of analyticity.  For real
    samples the conjugate-mirror half is not counted (it is redundant);
    for complex traces every negative-frequency mode counts as tail.
    """
    values = grid.check(values)
    n2 = grid.N // 2
    k0 = int(tail_start * n2)
    if np.isrealobj(values):
        e = np.abs(np.fft.rfft(values) / grid.N) ** 2
        total = e[1:].sum()              # the mean carries no aliasing risk
        tail = e[k0:].sum()
    else:
        e = np.abs(np.fft.fft(values) / grid.N) ** 2
        total = e[1:].sum()
        tail = e[k0:n2].sum() + e[n2:].sum()
    if total == 0.0:
        return 0.0
    return float(tail / total)

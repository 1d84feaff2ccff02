"""Conservation checks, geometric measurements, and scaling analysis.

Measurement code deliberately uses unfiltered spectral operators: these are
observations of a state, not part of the dynamics, and should be exact for
band-limited data.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from .dynamics import (Gauge, QUSState, SimState, ZFState, interface_trace,
                       jacobian_J, velocity_trace)
from .grid import SpectralGrid, analytic_extension, dtheta, dtheta_analytic, hilbert

__all__ = [
    "DiagnosticRecord", "ConicFit", "area", "energy", "conic_fit",
    "scaled_inverse_interface", "collapse_distance", "galilean_boost",
    "min_boundary_gap", "max_curvature",
]

DIAGNOSTIC_COLUMNS = (
    "t", "area", "kinetic", "surface_energy", "potential_energy",
    "total_energy", "minJ", "maxCurvature", "min_boundary_gap",
    "neg_mode_energy",
)


@dataclass(frozen=True)
class DiagnosticRecord:
    t: float
    area: float
    kinetic: float
    surface_energy: float
    potential_energy: float
    total_energy: float
    minJ: float
    maxCurvature: float
    min_boundary_gap: float
    neg_mode_energy: float

    def row(self):
        return [getattr(self, c) for c in DIAGNOSTIC_COLUMNS]


@dataclass(frozen=True)
class ConicFit:
    """Quadratic fit ``Y^2 = c0 + c1 X + c2 X^2`` converted to conic axes."""

    a: float
    b: float
    x0: float
    residual: float
    branch: str                   # "ellipse-like" (+) or "hyperbola-like" (-)
    coeffs: tuple


def area(Z: np.ndarray, grid: SpectralGrid) -> float:
    """Enclosed area by spectral quadrature of ``int X (Lambda X) dtheta``."""
    X = np.real(grid.check(Z))
    lx = hilbert(dtheta(X, grid, filtered=False), grid)
    return float(grid.h * np.sum(X * lx))


def kinetic_energy(Phi: np.ndarray, grid: SpectralGrid) -> float:
    """``(1/2) int Phi (Lambda Phi) dtheta`` (exact for band-limited data)."""
    lp = hilbert(dtheta(Phi, grid, filtered=False), grid)
    return float(0.5 * grid.h * np.sum(Phi * lp))


def _perimeter(Z: np.ndarray, grid: SpectralGrid) -> float:
    zt = dtheta_analytic(Z, grid, filtered=False)
    return float(grid.h * np.sum(np.abs(zt)))


def _bulk_potential(Z: np.ndarray, grid: SpectralGrid, b) -> float:
    """``int_Omega b dxdy``.

    Linear gravity ``b = g*y`` (marked by a ``gravity_g`` attribute) uses the
    exact boundary divergence form; any other callable falls back to tensor
    quadrature over the mapped disk via the interior expansion of the map.
    """
    if b is None:
        return 0.0
    g = getattr(b, "gravity_g", None)
    X = np.real(Z)
    Y = np.imag(Z)
    if g is not None:
        xt = dtheta(X, grid, filtered=False)
        # int_Omega y dA = -oint (y^2/2) dx
        return float(-g * 0.5 * grid.h * np.sum(Y * Y * xt))
    # fallback: Z(rho w) from the one-sided expansion, Gauss-Legendre in rho
    c = np.fft.fft(Z) / grid.N
    c[grid.N // 2:] = 0.0
    nodes, weights = np.polynomial.legendre.leggauss(64)
    rho = 0.5 * (nodes + 1.0)
    wq = 0.5 * weights
    k = np.arange(grid.N)
    total = 0.0
    for r, wr in zip(rho, wq):
        zr = np.fft.ifft(c * r ** k) * grid.N
        dzr = np.fft.ifft(c * k * r ** np.maximum(k - 1, 0)) * grid.N
        jac = np.abs(dzr) ** 2 * r
        total += wr * grid.h * np.sum(np.asarray(b(zr), float) * jac)
    return float(total)


def energy(state: SimState) -> DiagnosticRecord:
    """Full diagnostic record: area, energy split, geometry and spectra."""
    g = state.grid
    Z = interface_trace(state)
    if isinstance(state, ZFState):
        kin = kinetic_energy(state.Phi, g)
    else:
        zf = None
        # kinetic energy from the reciprocal variables: Phi = Re F
        from .dynamics import qus_to_zf
        zf = qus_to_zf(state)
        kin = kinetic_energy(zf.Phi, g)
    ph = state.physics
    surf = ph.gamma * _perimeter(Z, g) if ph.gamma > 0.0 else 0.0
    pot = _bulk_potential(Z, g, ph.body_potential)
    J = jacobian_J(state, filtered=False)
    from .grid import tail_energy_fraction
    if isinstance(state, ZFState):
        tail = max(tail_energy_fraction(state.X, g),
                   tail_energy_fraction(state.Phi, g))
    else:
        tail = max(tail_energy_fraction(state.Q, g),
                   tail_energy_fraction(state.Ubar, g),
                   tail_energy_fraction(state.S, g))
    return DiagnosticRecord(
        t=state.t,
        area=area(Z, g),
        kinetic=kin,
        surface_energy=surf,
        potential_energy=pot,
        total_energy=kin + surf + pot,
        minJ=float(J.min()),
        maxCurvature=max_curvature(Z, g),
        min_boundary_gap=min_boundary_gap(Z),
        neg_mode_energy=tail,
    )


def max_curvature(Z: np.ndarray, grid: SpectralGrid) -> float:
    zt = dtheta_analytic(Z, grid, filtered=False)
    ztt = dtheta_analytic(zt, grid, filtered=False)
    J = np.abs(zt) ** 2
    kappa = np.imag(np.conj(zt) * ztt) / np.maximum(J, 1e-300) ** 1.5
    return float(np.abs(kappa).max())


def min_boundary_gap(Z: np.ndarray, arc_factor: float = 4.0) -> float:
    """Minimum distance between parts of the curve far apart in arclength.

    Pairs closer along the curve than ``arc_factor`` times their Euclidean
    distance are skipped, so fine local node spacing never reads as a
    near-collision; what remains is the splash-singularity indicator.
    """
    z = np.asarray(Z, dtype=complex)
    pts = np.column_stack([z.real, z.imag])
    seg = np.abs(np.diff(z, append=z[:1]))
    total = seg.sum()
    if total == 0.0:
        return np.inf
    arc = np.concatenate([[0.0], np.cumsum(seg)[:-1]])
    tree = cKDTree(pts)
    r = max(4.0 * float(np.median(seg)), 1e-300)
    while r <= 4.0 * total:
        pairs = tree.query_pairs(r, output_type="ndarray")
        if len(pairs):
            i, j = pairs.T
            ds = np.abs(arc[i] - arc[j])
            ds = np.minimum(ds, total - ds)
            d = np.linalg.norm(pts[i] - pts[j], axis=1)
            keep = ds > arc_factor * np.maximum(d, 1e-300)
            if np.any(keep):
                return float(d[keep].min())
        r *= 2.0
    return np.inf


# ---------------------------------------------------------------------------
# conic fitting and self-similar collapse
# ---------------------------------------------------------------------------

def conic_fit(Z: np.ndarray, count: int = 150, center_index: int | None = None) -> ConicFit:
    """Least-squares conic through samples near the interface extremum.

    Fits ``Y^2`` as a quadratic in ``X`` over ``count`` samples around the
    rightmost point (or ``center_index``), then converts to semi-axes and
    center; the branch comes from the sign of the quadratic coefficient.
    """
    z = np.asarray(Z, dtype=complex)
    if count < 10 or z.size < count:
        raise ValueError("need at least 10 samples inside the fit window")
    idx = int(np.argmax(z.real)) if center_index is None else center_index
    off = np.arange(-(count // 2), count - count // 2)
    sel = (idx + off) % z.size
    X = z.real[sel]
    Y2 = z.imag[sel] ** 2
    # centered Vandermonde keeps the normal equations well conditioned
    xm = X.mean()
    V = np.column_stack([np.ones_like(X), X - xm, (X - xm) ** 2])
    coef, *_ = np.linalg.lstsq(V, Y2, rcond=None)
    d0, d1, d2 = coef
    c2 = d2
    c1 = d1 - 2.0 * d2 * xm
    c0 = d0 - d1 * xm + d2 * xm * xm
    resid = float(np.sqrt(np.mean((V @ coef - Y2) ** 2)))
    if c2 == 0.0:
        raise ValueError("degenerate fit: vanishing quadratic coefficient")
    x0 = -c1 / (2.0 * c2)
    e = c0 - c1 * c1 / (4.0 * c2)
    if c2 < 0.0:
        branch = "ellipse-like"
        b2 = e
        a2 = e / (-c2)
    else:
        branch = "hyperbola-like"
        b2 = -e
        a2 = -e / c2
    if b2 <= 0.0 or a2 <= 0.0:
        raise ValueError("fit window does not straddle a conic vertex")
    return ConicFit(float(np.sqrt(a2)), float(np.sqrt(b2)), float(x0),
                    resid, branch, (float(c0), float(c1), float(c2)))


def scaled_inverse_interface(Z: np.ndarray, t: float, beta: float) -> np.ndarray:
    """Reciprocal of the time-scaled interface, ``-i t**beta / Z``, water down."""
    if t <= 0.0:
        raise ValueError("scaling requires t > 0")
    z = np.asarray(Z, dtype=complex)
    if np.abs(z).min() == 0.0:
        raise ValueError("interface passes through the origin")
    return -1j * t ** beta / z


def collapse_distance(curves, window_factor: float = 1.5) -> float:
    """Largest pairwise discrete Hausdorff distance among scaled curves.

    Restricted to the tip neighbourhood: points whose modulus is below
    ``window_factor`` times the curve's maximum modulus (the tip image).
    """
    curves = [np.asarray(c, dtype=complex) for c in curves]
    if len(curves) < 2:
        raise ValueError("need at least two curves")

    def windowed(c):
        cutoff = window_factor * np.abs(c).max()
        pts = c[np.abs(c) <= cutoff]
        return np.column_stack([pts.real, pts.imag])

    pts = [windowed(c) for c in curves]
    trees = [cKDTree(p) for p in pts]
    worst = 0.0
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            dij = trees[j].query(pts[i])[0].max()
            dji = trees[i].query(pts[j])[0].max()
            worst = max(worst, dij, dji)
    return float(worst)


def galilean_boost(state: ZFState, v: complex) -> ZFState:
    """Boosted state at the same time: ``Z -> Z + v t``, ``F -> F + conj(v) Z``."""
    if not isinstance(state, ZFState):
        raise TypeError("boost acts on the primal form")
    g = state.grid
    Y = hilbert(state.X, g) + state.y0
    X = state.X + np.real(v) * state.t
    Phi = state.Phi + np.real(v) * state.X + np.imag(v) * Y
    return replace(state, X=X, Phi=Phi, y0=state.y0 + np.imag(v) * state.t)

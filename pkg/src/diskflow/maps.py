"""Conformal building blocks for initial data.

Disk automorphisms for grid compression, the wedge/half-plane chain with its
dimple regularizer, and the exact ellipse-to-disk map used to verify the
solver against the straining-ellipse solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elliptic import K_modulus, modulus_from_nome, sn_modulus
from .grid import SpectralGrid, analytic_extension, dtheta_analytic

__all__ = [
    "MobiusParams",
    "WedgeParams",
    "EllipseParams",
    "DomainError",
    "mobius",
    "mobius_dw",
    "wedge_chain",
    "ellipse_to_disk",
    "ellipse_boundary_trace",
]


class DomainError(ValueError):
    """Input point lies outside the map's domain of validity."""


@dataclass(frozen=True)
class MobiusParams:
    """Disk automorphism ``zeta_r(w) = (w+r)/(1+r w)``.

    Compresses the boundary grid near ``w = +1`` by the factor
    ``c = ((1+r)/(1-r))**2``.
    """

    r: float

    def __post_init__(self):
        if not 0.0 <= self.r < 1.0:
            raise ValueError(f"r must lie in [0, 1), got {self.r}")

    @property
    def compression(self) -> float:
        return ((1.0 + self.r) / (1.0 - self.r)) ** 2

    @classmethod
    def from_compression(cls, c: float) -> "MobiusParams":
        if c < 1.0:
            raise ValueError(f"compression must be >= 1, got {c}")
        s = np.sqrt(c)
        return cls((s - 1.0) / (s + 1.0))


def mobius(w, p: MobiusParams):
    """Evaluate the automorphism; maps disk to disk, circle to circle."""
    w = np.asarray(w, dtype=complex)
    return (w + p.r) / (1.0 + p.r * w)


def mobius_dw(w, p: MobiusParams):
    w = np.asarray(w, dtype=complex)
    return (1.0 - p.r * p.r) / (1.0 + p.r * w) ** 2


@dataclass(frozen=True)
class WedgeParams:
    """Smooth approximation to a wedge of opening angle ``Theta`` (outside the fluid).

    ``nu = 2 - Theta/pi`` is the power of the half-plane-to-wedge map.  The
    dimple profile ``eps1*cos(t/2)**p1 + eps2*cos(t)**p2`` rounds the tip
    (eps1 term, centered where the chain sends ``w = -1``) and keeps the
    image of ``w = +1`` a distance ~eps2 from the half-plane map's pole.
    """

    theta_opening: float          # radians, in (0, pi)
    c_plus: float | None = None   # half-plane scale; default 2/eps1
    eps1: float = 0.1
    p1: int = 81
    eps2: float = 1e-5
    p2: int | None = None         # default 20*p1

    def __post_init__(self):
        # theta = pi (nu = 1) is the degenerate flat-interface illustration
        if not 0.0 < self.theta_opening <= np.pi:
            raise ValueError("opening angle must lie in (0, pi]")

    @property
    def nu(self) -> float:
        return 2.0 - self.theta_opening / np.pi

    @property
    def scale(self) -> float:
        return self.c_plus if self.c_plus is not None else 2.0 / self.eps1

    @property
    def power2(self) -> int:
        return self.p2 if self.p2 is not None else 20 * self.p1


def wedge_chain(grid: SpectralGrid, wp: WedgeParams, mp: MobiusParams,
                with_derivative: bool = False):
    """Initial interface ``Z_j`` of the dimpled wedge on the grid.

    Composition: Mobius compression, dimple factor, disk-to-half-plane,
    power-law half-plane-to-wedge.  The dimple's holomorphic extension is
    taken on the same N-point grid as the simulation so the initial data is
    exactly representable in the spectral basis.  With ``with_derivative``
    also returns ``dZ/dw`` from the analytic chain rule.
    """
    w = grid.nodes
    zr = mobius(w, mp)
    # profile of the dimple, sampled through the compression map
    vartheta = np.angle(-zr)
    prof = wp.eps1 * np.cos(vartheta / 2.0) ** wp.p1 \
        + wp.eps2 * np.cos(vartheta) ** wp.power2
    ext = analytic_extension(prof, grid)
    h = ext.values
    m = zr * np.exp(-h)
    one_minus = 1.0 - m
    if np.abs(one_minus).min() < 1e-13:
        raise DomainError("dimpled circle touches the half-plane map pole at w=1")
    zplus = wp.scale * (-1.0 + 2.0 / one_minus)
    # cut of the power branch lies along the negative real axis
    on_cut = (zplus.real < 0.0) & (np.abs(zplus.imag) < 1e-12 * np.abs(zplus.real))
    if np.any(on_cut):
        raise DomainError("half-plane image crossed the w**nu branch cut")
    z = np.exp(wp.nu * np.log(zplus))
    if not with_derivative:
        return z
    dzr = mobius_dw(w, mp)
    dh = dtheta_analytic(h, grid, filtered=False) / (1j * w)
    dm = np.exp(-h) * dzr - m * dh
    dzplus = wp.scale * 2.0 / one_minus ** 2 * dm
    dz = wp.nu * z / zplus * dzplus
    return z, dz


@dataclass(frozen=True)
class EllipseParams:
    """Ellipse with semi-axes ``a >= b > 0``; nome ``q = ((a-b)/(a+b))**2``."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a >= self.b > 0.0:
            raise ValueError(f"need a >= b > 0, got a={self.a}, b={self.b}")

    @property
    def q(self) -> float:
        return ((self.a - self.b) / (self.a + self.b)) ** 2


def ellipse_to_disk(z, p: EllipseParams, check_domain: bool = True):
    """Exact conformal map of the ellipse interior onto the unit disk.

    ``w = sqrt(k) sn((2K/pi) asin(z/c0); k)`` with ``c0`` the focal
    half-distance, modulus ``k`` built from the nome ``q``, and the
    principal asin branch.  Fixes 0 and has positive real derivative there.
    """
    z = np.asarray(z, dtype=complex)
    if check_domain:
        inside = (z.real / p.a) ** 2 + (z.imag / p.b) ** 2 <= 1.0 + 1e-9
        if not np.all(inside):
            raise DomainError("point outside the ellipse")
    q = p.q
    if q < 1e-15:
        return z / p.a
    c0 = np.sqrt(p.a * p.a - p.b * p.b)
    k = modulus_from_nome(q)
    K = K_modulus(k)
    zeta = np.arcsin(z / c0 + 0j)
    return np.sqrt(k) * sn_modulus(2.0 * K / np.pi * zeta, k)


def ellipse_boundary_trace(theta: np.ndarray, p: EllipseParams,
                           refine: int = 8) -> np.ndarray:
    """Conformal boundary parametrization ``Z(theta)`` of the ellipse.

    Inverts the boundary correspondence of `ellipse_to_disk` (whose inverse
    fixes 0 with positive derivative there): samples the forward map on a
    fine geometric parametrization, then polishes each requested node by
    secant iteration on the boundary angle.  Used as the closed-form
    interface oracle for the straining-ellipse test.
    """
    theta = np.asarray(theta, dtype=float)
    if p.q < 1e-15:
        return p.a * np.exp(1j * theta)

    def zgeom(phi):
        return p.a * np.cos(phi) + 1j * p.b * np.sin(phi)

    m = refine * max(256, 4 * theta.size)
    phi = 2.0 * np.pi * np.arange(m + 1) / m
    wfine = ellipse_to_disk(zgeom(phi), p, check_domain=False)
    tfine = np.unwrap(np.angle(wfine))
    # boundary correspondence is an increasing circle homeomorphism
    # fixing theta=0 (z=a maps to w on the positive real axis)
    tfine = tfine - tfine[0]
    target = np.mod(theta, 2.0 * np.pi)
    phi0 = np.interp(target, tfine, phi)

    def angle_err(ph, th):
        wv = ellipse_to_disk(zgeom(ph), p, check_domain=False)
        return np.angle(wv * np.exp(-1j * th))

    # secant polish, vectorized over nodes
    x0 = phi0
    x1 = phi0 + 1e-6
    f0 = angle_err(x0, target)
    f1 = angle_err(x1, target)
    for _ in range(60):
        df = f1 - f0
        df = np.where(np.abs(df) < 1e-300, 1e-300, df)
        x2 = x1 - f1 * (x1 - x0) / df
        x0, f0 = x1, f1
        x1 = x2
        f1 = angle_err(x1, target)
        if np.abs(f1).max() < 1e-14:
            break
    return zgeom(x1)

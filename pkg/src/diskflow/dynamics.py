"""Right-hand sides of the two conformal evolution systems.

State variables live on the boundary circle.  The primal form evolves the
real traces ``X = Re Z`` and ``Phi = Re F`` (imaginary parts are recovered
by the Hilbert transform); the reciprocal form evolves the bounded traces
``Q = 1/Z_w``, ``Ubar = F_w/Z_w`` and an auxiliary analytic function ``S``
of ``Z`` used to recover the interface on very large domains.

Both systems share the velocity trace ``G`` (from the kinematic condition)
and the Bernoulli trace ``R``.  All theta-derivatives inside the dynamics
are spectrally filtered.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import grid as sg
from .grid import (BoundaryTrace, SpectralGrid, analytic_extension, dtheta,
                   dtheta_analytic, dw, hilbert, reconstruct_Z)
from .maps import MobiusParams, WedgeParams, mobius, wedge_chain

__all__ = [
    "Gauge", "PhysicsParams", "ZFState", "QUSState", "SimState",
    "NearSingularJacobianError", "jacobian_J", "curvature_pressure",
    "compute_G", "compute_R", "rhs_zf", "rhs_qus",
    "interface_trace", "velocity_trace", "zf_to_qus", "qus_to_zf",
    "initial_data",
]

# when enabled, every primal RHS evaluation asserts the discrete kinematic
# identity Re(nbar Z_t) = Lambda Phi to 1e-12 (relative)
KINEMATIC_DEBUG = False


class NearSingularJacobianError(FloatingPointError):
    """|Z_theta| collapsed somewhere on the boundary."""

    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"near-singular Jacobian at node {index}: sqrt(J)={value:.3e}")


class Gauge(Enum):
    """Disk-automorphism freedom of the parametrization.

    FIXED_CENTER pins the image of the origin and the argument of the first
    map coefficient (the simplest choice, used by all bundled experiments);
    MOVING_CENTER advects the image of the origin with the fluid velocity.
    """

    FIXED_CENTER = "fixed-center"
    MOVING_CENTER = "moving-center"


@dataclass(frozen=True)
class PhysicsParams:
    """Surface tension, body potential, and the Bernoulli constant choice."""

    gamma: float = 0.0
    body_potential: object = None      # callable z -> real, or None
    c1_tilde: float = 0.0

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("surface tension must be >= 0")


@dataclass(frozen=True)
class ZFState:
    """Primal variables: real parts of the map and potential traces.

    ``y0`` carries the mean of ``Im Z`` (lost by the Hilbert transform);
    under the fixed-center gauge it is a constant of the motion.
    """

    X: np.ndarray
    Phi: np.ndarray
    grid: SpectralGrid
    t: float = 0.0
    y0: float = 0.0
    gauge: Gauge = Gauge.FIXED_CENTER
    physics: PhysicsParams = field(default_factory=PhysicsParams)

    def __post_init__(self):
        object.__setattr__(self, "X", np.asarray(self.grid.check(self.X), float))
        object.__setattr__(self, "Phi", np.asarray(self.grid.check(self.Phi), float))


@dataclass(frozen=True)
class QUSState:
    """Reciprocal variables: analytic traces of 1/Z_w, conj-velocity, and S.

    ``s_kind`` records which analytic function of Z the S-trace carries:
    ``identity`` (S = Z, for bounded droplets), ``reciprocal`` (S = 1/Z) or
    ``inv_power`` with exponent nu (S = Z**(-1/nu), for wedge domains).
    ``z_center`` is the image of the disk origin, needed to offset the
    zero-normalized reconstruction.
    """

    Q: np.ndarray
    Ubar: np.ndarray
    S: np.ndarray
    grid: SpectralGrid
    t: float = 0.0
    z_center: complex = 0.0 + 0.0j
    s_kind: str = "identity"
    s_power: float = 1.0               # nu for s_kind="inv_power"
    gauge: Gauge = Gauge.FIXED_CENTER
    physics: PhysicsParams = field(default_factory=PhysicsParams)

    def __post_init__(self):
        for name in ("Q", "Ubar", "S"):
            object.__setattr__(self, name, np.asarray(
                self.grid.check(getattr(self, name)), complex))
        if self.s_kind not in ("identity", "reciprocal", "inv_power"):
            raise ValueError(f"unknown s_kind {self.s_kind!r}")
        if self.gauge is Gauge.MOVING_CENTER:
            raise NotImplementedError(
                "moving-center gauge is only wired for the primal form")


SimState = ZFState | QUSState


# ---------------------------------------------------------------------------
# shared geometric pieces
# ---------------------------------------------------------------------------

def jacobian_J(state: SimState, filtered: bool = True) -> np.ndarray:
    """|Z_theta|^2 on the boundary."""
    if isinstance(state, ZFState):
        xt = dtheta(state.X, state.grid, filtered=filtered)
        lx = hilbert(xt, state.grid)
        return xt * xt + lx * lx
    return 1.0 / np.abs(state.Q) ** 2


def _check_J(J: np.ndarray, floor_rel: float = 1e-14):
    sqrtJ = np.sqrt(J)
    jmax = sqrtJ.max()
    amin = int(np.argmin(sqrtJ))
    if sqrtJ[amin] <= floor_rel * max(jmax, 1e-300):
        raise NearSingularJacobianError(amin, float(sqrtJ[amin]))
    return sqrtJ


def curvature_pressure(X: np.ndarray, grid: SpectralGrid, gamma: float,
                       filtered: bool = True) -> np.ndarray:
    """Surface-tension pressure ``gamma * kappa``; unit circle gives +gamma."""
    xt = dtheta(X, grid, filtered=filtered)
    lx = hilbert(xt, grid)
    xtt = dtheta(xt, grid, filtered=filtered)
    lxt = dtheta(lx, grid, filtered=filtered)
    J = xt * xt + lx * lx
    _check_J(J)
    return gamma * J ** -1.5 * (xt * lxt - xtt * lx)


def _curvature_complex(Z: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Curvature of a complex analytic interface trace."""
    zt = dtheta_analytic(Z, grid, filtered=True)
    ztt = dtheta_analytic(zt, grid, filtered=True)
    J = np.abs(zt) ** 2
    _check_J(J)
    return np.imag(np.conj(zt) * ztt) / J ** 1.5


# ---------------------------------------------------------------------------
# gauge terms
# ---------------------------------------------------------------------------

def _zf_hats(state: ZFState):
    """Leading analytic coefficients Z1, F1 from the real traces."""
    n = state.grid.N
    xh = np.fft.rfft(state.X) / n
    ph = np.fft.rfft(state.Phi) / n
    return 2.0 * xh[1], 2.0 * ph[1]


def _upsilon1(state: ZFState) -> np.ndarray | float:
    """Tangential gauge term: zero when the center is pinned."""
    if state.gauge is Gauge.FIXED_CENTER:
        return 0.0
    z1, f1 = _zf_hats(state)
    w = state.grid.nodes
    return -2.0 * np.imag(w * f1) / abs(z1) ** 2


def _y0_rate(state: ZFState) -> float:
    if state.gauge is Gauge.FIXED_CENTER:
        return 0.0
    z1, f1 = _zf_hats(state)
    return float(-np.imag(f1 / z1))


# ---------------------------------------------------------------------------
# kinematic and Bernoulli traces
# ---------------------------------------------------------------------------

def _normal_velocity_over_J(state: SimState):
    """Re(G/w) = (normal coordinate velocity)/J, plus cached derivatives."""
    g = state.grid
    if isinstance(state, ZFState):
        xt = dtheta(state.X, g)
        lx = hilbert(xt, g)
        pt = dtheta(state.Phi, g)
        lp = hilbert(pt, g)
        J = xt * xt + lx * lx
        _check_J(J)
        return lp / J, {"Xt": xt, "LX": lx, "Pt": pt, "LP": lp, "J": J}
    un_over_J = np.real(g.nodes * state.Ubar * np.conj(state.Q))
    return un_over_J, {}


def compute_G(state: SimState) -> BoundaryTrace:
    """Coordinate-velocity trace: ``G = w (I+iH)(nu_n/J) + upsilon_0``."""
    g = state.grid
    un_over_J, _ = _normal_velocity_over_J(state)
    base = analytic_extension(un_over_J, g).values * g.nodes
    if isinstance(state, ZFState) and state.gauge is Gauge.MOVING_CENTER:
        z1, f1 = _zf_hats(state)
        w = g.nodes
        base = base + (np.conj(f1) - w * w * f1) / abs(z1) ** 2
    return BoundaryTrace.from_values(g, base, analytic=True)


def _pressure_and_body(state: SimState):
    ph = state.physics
    p = 0.0
    b = 0.0
    if ph.gamma > 0.0 or ph.body_potential is not None:
        if isinstance(state, ZFState):
            if ph.gamma > 0.0:
                p = curvature_pressure(state.X, state.grid, ph.gamma)
            if ph.body_potential is not None:
                y = hilbert(state.X, state.grid) + state.y0
                b = np.asarray(ph.body_potential(state.X + 1j * y), float)
        else:
            Z = interface_trace(state)
            if ph.gamma > 0.0:
                p = ph.gamma * _curvature_complex(Z, state.grid)
            if ph.body_potential is not None:
                b = np.asarray(ph.body_potential(Z), float)
    return p, b


def compute_R(state: SimState) -> BoundaryTrace:
    """Bernoulli trace: ``R = (I+iH)(|U|^2/2 + p + b) + c1``."""
    g = state.grid
    if isinstance(state, ZFState):
        _, d = _normal_velocity_over_J(state)
        speed2 = (d["Pt"] ** 2 + d["LP"] ** 2) / (2.0 * d["J"])
    else:
        speed2 = 0.5 * np.abs(state.Ubar) ** 2
    p, b = _pressure_and_body(state)
    vals = analytic_extension(speed2 + p + b, g).values + state.physics.c1_tilde
    return BoundaryTrace.from_values(g, vals, analytic=True)


# ---------------------------------------------------------------------------
# right-hand sides
# ---------------------------------------------------------------------------

def rhs_zf(state: ZFState):
    """Rates of the primal system (all theta-derivatives filtered)."""
    g = state.grid
    un_over_J, d = _normal_velocity_over_J(state)
    tang = hilbert(un_over_J, g) + _upsilon1(state)
    Xdot = d["LX"] * un_over_J + d["Xt"] * tang
    p, b = _pressure_and_body(state)
    Phidot = (-p - b - state.physics.c1_tilde
              + (d["LP"] ** 2 - d["Pt"] ** 2) / (2.0 * d["J"])
              + d["Pt"] * tang)
    if KINEMATIC_DEBUG:
        _assert_kinematic(state, Xdot, d)
    return Xdot, Phidot


def _assert_kinematic(state: ZFState, Xdot: np.ndarray, d: dict):
    # Re(nbar Z_t) = Y_theta X_t - X_theta Y_t must equal Lambda Phi
    Ydot = hilbert(Xdot, state.grid) + _y0_rate(state)
    resid = d["LX"] * Xdot - d["Xt"] * Ydot - d["LP"]
    scale = max(1.0, np.abs(d["LP"]).max())
    if np.abs(resid).max() > 1e-12 * scale:
        raise AssertionError(
            f"kinematic identity violated: {np.abs(resid).max() / scale:.3e}")


def rhs_qus(state: QUSState):
    """Rates of the reciprocal system.

    d/dw acts modally with the filter; every product is pointwise and the
    resulting rates are projected back onto the analytic (one-sided) band so
    aliasing never enters the carried state.
    """
    g = state.grid
    w = g.nodes
    un_over_J, _ = _normal_velocity_over_J(state)
    G = analytic_extension(un_over_J, g).values * w
    Gw = dw(G, g)
    p, b = _pressure_and_body(state)
    r_arg = 0.5 * np.abs(state.Ubar) ** 2 + p + b
    R = analytic_extension(r_arg, g).values        # c1 constant drops under d/dw
    Rw = dw(R, g)
    Qw = dw(state.Q, g)
    Uw = dw(state.Ubar, g)
    Sw = dw(state.S, g)
    Qdot = sg.analytic_projection(Qw * G - state.Q * Gw, g)
    Udot = sg.analytic_projection(Uw * G - state.Q * Rw, g)
    Sdot = sg.analytic_projection(Sw * G, g)
    return Qdot, Udot, Sdot


# ---------------------------------------------------------------------------
# trace recovery and conversions
# ---------------------------------------------------------------------------

def interface_trace(state: SimState, from_S: bool | None = None) -> np.ndarray:
    """Complex interface samples ``Z_j``.

    For the reciprocal form the default path integrates ``1/Q`` spectrally
    (plus the carried center offset); ``from_S=True`` instead inverts the
    S-trace pointwise, which is preferable on huge wedge domains.
    """
    if isinstance(state, ZFState):
        return state.X + 1j * (hilbert(state.X, state.grid) + state.y0)
    if from_S is None:
        from_S = state.s_kind == "inv_power"
    if from_S and state.s_kind != "identity":
        if state.s_kind == "reciprocal":
            return 1.0 / state.S
        return np.exp(-state.s_power * np.log(state.S))
    if from_S and state.s_kind == "identity":
        return state.S.copy()
    q = BoundaryTrace.from_values(state.grid, state.Q, analytic=True)
    return reconstruct_Z(q, state.grid).values + state.z_center


def velocity_trace(state: SimState) -> np.ndarray:
    """Conjugate-velocity samples ``Ubar_j = (F_w/Z_w)_j``."""
    if isinstance(state, QUSState):
        return state.Ubar.copy()
    g = state.grid
    Z = state.X + 1j * hilbert(state.X, g)
    F = analytic_extension(state.Phi, g).values
    zt = dtheta_analytic(Z, g, filtered=False)
    ft = dtheta_analytic(F, g, filtered=False)
    _check_J(np.abs(zt) ** 2)
    return ft / zt


def zf_to_qus(state: ZFState, s_kind: str = "identity",
              s_power: float = 1.0) -> QUSState:
    """Convert primal data to reciprocal data (spectral, unfiltered)."""
    g = state.grid
    Z = state.X + 1j * (hilbert(state.X, g) + state.y0)
    F = analytic_extension(state.Phi, g).values
    w = g.nodes
    Zw = dtheta_analytic(Z, g, filtered=False) / (1j * w)
    Fw = dtheta_analytic(F, g, filtered=False) / (1j * w)
    _check_J(np.abs(Zw) ** 2)
    Q = 1.0 / Zw
    Ubar = Fw / Zw
    if s_kind == "identity":
        S = Z
    elif s_kind == "reciprocal":
        S = 1.0 / Z
    else:
        S = np.exp(-np.log(Z) / s_power)
    zc = complex(np.mean(Z))
    return QUSState(sg.analytic_projection(Q, g), sg.analytic_projection(Ubar, g),
                    sg.analytic_projection(S, g), g, t=state.t, z_center=zc,
                    s_kind=s_kind, s_power=s_power, gauge=state.gauge,
                    physics=state.physics)


def qus_to_zf(state: QUSState) -> ZFState:
    """Convert reciprocal data back to primal data (potential mean set to 0)."""
    g = state.grid
    Z = interface_trace(state, from_S=False)
    fw_over = state.Ubar / state.Q                 # F_w trace
    c = np.fft.fft(fw_over) / g.N
    n2 = g.N // 2
    fc = np.zeros(g.N, dtype=complex)
    k = np.arange(1, n2)
    fc[1:n2] = c[:n2 - 1] / k
    F = np.fft.ifft(fc) * g.N
    return ZFState(np.real(Z), np.real(F), g, t=state.t,
                   y0=float(np.mean(np.imag(Z))), gauge=state.gauge,
                   physics=state.physics)


# ---------------------------------------------------------------------------
# experiment initial conditions
# ---------------------------------------------------------------------------

def initial_data(preset: str, grid: SpectralGrid, *, formulation: str = None,
                 gauge: Gauge = Gauge.FIXED_CENTER,
                 physics: PhysicsParams | None = None, **kw) -> SimState:
    """Fully populated state for a named experiment.

    Presets: ``ellipse-test`` (circle with straining potential),
    ``fivefold`` (circle, five-fold symmetric velocity), ``nose``
    (compressed grid, single-bump potential), ``wedge`` (dimpled wedge with
    power-law velocity, starts at t0 = 1).
    """
    physics = physics or PhysicsParams()
    th = grid.theta
    if preset == "ellipse-test":
        # the straining circle: unit dilation rates, so the semi-axis
        # reaches ~1.2778 at t = 0.25 and the accuracy table is reproduced
        formulation = formulation or "zf"
        amp = kw.pop("velocity_scale", 0.5)
        _reject_extra(kw)
        zf = ZFState(np.cos(th), amp * np.cos(2 * th), grid,
                     gauge=gauge, physics=physics)
        return zf if formulation == "zf" else zf_to_qus(zf)
    if preset == "fivefold":
        formulation = formulation or "qus"
        amp = kw.pop("amplitude", -0.15)
        _reject_extra(kw)
        zf = ZFState(np.cos(th), amp * np.cos(5 * th), grid,
                     gauge=gauge, physics=physics)
        return zf if formulation == "zf" else zf_to_qus(zf)
    if preset == "nose":
        formulation = formulation or "zf"
        c = kw.pop("compression", 250.0)
        power = kw.pop("power", 5)
        _reject_extra(kw)
        mp = MobiusParams.from_compression(c)
        Z = mobius(grid.nodes, mp)
        X = np.real(Z)
        Phi = ((X + 1.0) / 2.0) ** power
        zf = ZFState(X, Phi, grid, y0=float(np.mean(np.imag(Z))),
                     gauge=gauge, physics=physics)
        return zf if formulation == "zf" else zf_to_qus(zf)
    if preset == "wedge":
        formulation = formulation or "qus"
        if formulation != "qus":
            raise ValueError("the wedge preset runs in the reciprocal form")
        theta_deg = kw.pop("opening_deg", 60.0)
        alpha_nu = kw.pop("alpha_nu", 1.0)
        c = kw.pop("compression", 20000.0)
        t0 = kw.pop("t0", 1.0)
        wp = kw.pop("wedge_params", None) or WedgeParams(np.deg2rad(theta_deg))
        _reject_extra(kw)
        mp = MobiusParams.from_compression(c)
        Z, Zw = wedge_chain(grid, wp, mp, with_derivative=True)
        nu = wp.nu
        alpha = alpha_nu / nu
        logZ = np.log(Z)
        Ubar = alpha * np.exp((alpha - 1.0) * logZ)
        S = np.exp(-logZ / nu)
        z_center = _wedge_center(wp, mp, grid)
        return QUSState(
            sg.analytic_projection(1.0 / Zw, grid),
            sg.analytic_projection(Ubar, grid),
            sg.analytic_projection(S, grid),
            grid, t=t0, z_center=z_center, s_kind="inv_power", s_power=nu,
            gauge=gauge, physics=physics)
    raise ValueError(f"unknown preset {preset!r}")


def _reject_extra(kw):
    if kw:
        raise TypeError(f"unexpected preset parameters: {sorted(kw)}")


def _wedge_center(wp: WedgeParams, mp: MobiusParams, grid: SpectralGrid) -> complex:
    """Image of the disk origin under the wedge chain (constant of the motion)."""
    zr0 = mobius(np.array([0.0 + 0.0j]), mp)[0]
    vartheta = np.angle(-mobius(grid.nodes, mp))
    prof = wp.eps1 * np.cos(vartheta / 2.0) ** wp.p1 \
        + wp.eps2 * np.cos(vartheta) ** wp.power2
    h0 = np.fft.rfft(prof)[0].real / grid.N       # extension at w=0 is the mean
    m0 = zr0 * np.exp(-h0)
    zplus0 = wp.scale * (-1.0 + 2.0 / (1.0 - m0))
    return complex(np.exp(wp.nu * np.log(zplus0)))

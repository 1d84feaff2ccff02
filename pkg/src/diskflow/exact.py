"""Closed-form and reduced-ODE solution families.

Three families of exact free-boundary potential flows serve as oracles and
as standalone analysis tools:

* conic interfaces (ellipses/hyperbolas in any dimension) whose semi-axes
  follow constant-speed geodesics on the constant-volume surface;
* self-gravitating ellipsoids reduced to a matrix ODE for the deformation;
* ballistic interfaces (zero-acceleration surface particles) derived from
  holomorphic solutions of the complex Hopf equation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad

from .rk import integrate_adaptive

__all__ = [
    "ConicState", "conic_rhs", "integrate_conic", "taylor_sign",
    "ParabolicDegeneracyError", "hyperbola_classify", "hyperbola_trajectory",
    "HyperbolaResult", "ellipse_conformal_oracle",
    "EllipsoidState", "gravity_alpha", "ellipsoid_rhs", "integrate_ellipsoid",
    "dedekind_residual",
    "BallisticCusp", "BallisticCavity", "ballistic_boundary",
    "ballistic_singularity_time", "cavity_splash_time", "cusp_tip_exponent",
]


class ParabolicDegeneracyError(ZeroDivisionError):
    """The pressure multiplier is singular (sum of sigma_j/a_j^2 vanished)."""


# ---------------------------------------------------------------------------
# conic geodesics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConicState:
    """Semi-axes and velocities of a conic interface in dimension d.

    ``sigma`` holds the metric signature (+1 per bounded axis), ``sigma0``
    the level-set constant.  The product of the axes is an invariant, as is
    the signed squared speed ``sum sigma_j adot_j^2``.
    """

    a: np.ndarray
    adot: np.ndarray
    sigma: np.ndarray
    sigma0: float = 1.0
    t: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "adot", np.asarray(self.adot, dtype=float))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))
        if a.ndim != 1 or a.size < 2:
            raise ValueError("need at least two semi-axes")
        if np.any(a <= 0):
            raise ValueError("semi-axes must be positive")
        if self.adot.shape != a.shape or self.sigma.shape != a.shape:
            raise ValueError("a, adot, sigma must share a shape")
        if not np.all(np.abs(self.sigma) == 1.0):
            raise ValueError("sigma entries must be +/-1")

    @property
    def d(self) -> int:
        return self.a.size

    @property
    def volume_radius(self) -> float:
        return float(np.prod(self.a) ** (1.0 / self.d))

    @property
    def signed_speed(self) -> float:
        return float(np.sum(self.sigma * self.adot ** 2))


def pressure_multiplier(s: ConicState) -> float:
    """beta = (sum adot_j^2/a_j^2) / (sum sigma_j/a_j^2)."""
    num = float(np.sum(s.adot ** 2 / s.a ** 2))
    den = float(np.sum(s.sigma / s.a ** 2))
    scale = float(np.sum(1.0 / s.a ** 2))
    if abs(den) < 1e-14 * scale:
        raise ParabolicDegeneracyError(
            "sum sigma_j/a_j^2 vanished (hyperbola at 45 degrees)")
    return num / den


def conic_rhs(s: ConicState):
    """Geodesic acceleration: ``addot_j = beta sigma_j / a_j``."""
    beta = pressure_multiplier(s)
    return s.adot.copy(), beta * s.sigma / s.a


def taylor_sign(s: ConicState) -> int:
    """Sign of the pressure multiplier; + means the interface is linearly stable."""
    if np.all(s.adot == 0.0):
        return 0
    return int(np.sign(pressure_multiplier(s)))


def integrate_conic(s: ConicState, t_end: float, rtol=1e-12, atol=1e-14,
                    target_times=()):
    """Evolve the conic ODE; returns (final ConicState, list of sampled states)."""
    d = s.d

    def f(t, y):
        st = replace(s, a=y[:d], adot=y[d:], t=t)
        da, dv = conic_rhs(st)
        return np.concatenate([da, dv])

    samples = []

    def grab(t, y):
        samples.append(replace(s, a=y[:d].copy(), adot=y[d:].copy(), t=t))

    res = integrate_adaptive(f, s.t, np.concatenate([s.a, s.adot]), t_end,
                             rtol=rtol, atol=atol, target_times=target_times,
                             on_target=grab)
    final = replace(s, a=res.y[:d].copy(), adot=res.y[d:].copy(), t=res.t)
    return final, samples


def ellipse_conformal_oracle(s0: ConicState, t: float, rtol=1e-12, atol=1e-14):
    """Axes, potential coefficients and Bernoulli data of a straining ellipse.

    For a 2D all-plus conic with unit axis product, returns a dict with the
    semi-axes ``a`` at time ``t``, the dilation rates ``alpha_j = adot_j/a_j``
    and the Bernoulli offset rate ``lambda_dot = beta/2`` needed to evaluate
    the exact complex potential ``f(z) = (alpha1-alpha2)/4 z^2 - lambda``.
    """
    if s0.d != 2 or not np.all(s0.sigma == 1.0):
        raise ValueError("oracle is for the bounded 2D ellipse family")
    final, _ = integrate_conic(s0, t, rtol=rtol, atol=atol) if t != s0.t else (s0, [])
    beta = pressure_multiplier(final)
    alpha = final.adot / final.a
    return {
        "a": final.a,
        "adot": final.adot,
        "alpha": alpha,
        "beta": beta,
        "lambda_dot": 0.5 * beta * s0.sigma0,
        "t": t,
    }


# ---------------------------------------------------------------------------
# 2D hyperbola blow-up
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HyperbolaResult:
    t: np.ndarray
    a1: np.ndarray
    theta: np.ndarray
    blowup_time: float | None
    classification: str           # "finite-time-blow-up" | "global-existence"


def hyperbola_classify(theta0: float, a1dot_sign: float) -> str:
    """Case table: blow-up iff the asymptote angle moves toward 45 degrees."""
    toward = (theta0 < np.pi / 4 and a1dot_sign < 0) or \
             (theta0 > np.pi / 4 and a1dot_sign > 0)
    return "finite-time-blow-up" if toward else "global-existence"


def hyperbola_trajectory(theta0: float, tau: float, t_span: float, r: float = 1.0,
                         rtol=1e-12, atol=1e-14, n_samples: int = 200) -> HyperbolaResult:
    """Integrate ``a1' = tau / |tan(theta)^2 - 1|^{1/2}``, ``tan(theta) = r^2/a1^2``.

    ``tau`` carries the sign of ``a1'``.  When the angle heads for 45
    degrees the trajectory ends in finite time; the blow-up time is located
    by bisection on the angle deficit to 1e-10.
    """
    if not 0.0 < theta0 < np.pi / 2 or abs(theta0 - np.pi / 4) < 1e-14:
        raise ValueError("theta0 must lie in (0, pi/2) away from pi/4")
    if tau == 0.0:
        raise ValueError("tau must be nonzero")
    a1_0 = r / np.sqrt(np.tan(theta0))
    classification = hyperbola_classify(theta0, np.sign(tau))

    def f(t, y):
        tan_th = r * r / y[0] ** 2
        return np.array([tau / np.sqrt(abs(tan_th * tan_th - 1.0))])

    targets = np.linspace(0.0, t_span, n_samples + 1)[1:]
    ts, a1s = [0.0], [a1_0]

    def grab(t, y):
        ts.append(t)
        a1s.append(y[0])

    res = integrate_adaptive(f, 0.0, np.array([a1_0]), t_span, rtol=rtol,
                             atol=atol, target_times=targets, on_target=grab)

    blowup = None
    if classification == "finite-time-blow-up":
        # exact clock: t(a) integrates da/a1'; the integrand vanishes at the
        # degenerate endpoint a = r, so the quadrature locates the blow-up
        # time well below the 1e-10 contract
        lo_a, hi_a = sorted((a1_0, r))
        blowup, _ = quad(lambda a: np.sqrt(abs((r / a) ** 4 - 1.0)) / abs(tau),
                         lo_a, hi_a, epsabs=1e-14, epsrel=1e-13, limit=400)

    ts = np.asarray(ts)
    a1s = np.asarray(a1s)
    theta = np.arctan(r * r / a1s ** 2)
    return HyperbolaResult(ts, a1s, theta, blowup, classification)


# ---------------------------------------------------------------------------
# self-gravitating ellipsoids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EllipsoidState:
    """Deformation matrix, its rate, and the gravity coupling 2*pi*G*rho0."""

    P: np.ndarray
    Pdot: np.ndarray
    gamma0: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "Pdot", np.asarray(self.Pdot, dtype=float))
        if P.shape != (3, 3) or self.Pdot.shape != (3, 3):
            raise ValueError("P and Pdot must be 3x3")
        if abs(np.linalg.det(P)) < 1e-14:
            raise ValueError("P must be nonsingular")


def gravity_alpha(axes) -> np.ndarray:
    """Axis integrals (alpha0, alpha1, alpha2, alpha3) of the interior potential.

    ``alpha0 = int_0^inf du/Delta``, ``alpha_i = int_0^inf du/(Delta (a_i^2+u))``
    with ``Delta^2 = prod (a_j^2 + u)``; the improper integrals are mapped to
    [0, 1) by ``u = a1^2 s/(1-s)`` and evaluated adaptively to 1e-12.
    """
    a = np.asarray(axes, dtype=float)
    if a.shape != (3,) or np.any(a <= 0):
        raise ValueError("need three positive semi-axes")
    s2 = a ** 2
    ref = s2[0]

    def delta(u):
        return np.sqrt((s2[0] + u) * (s2[1] + u) * (s2[2] + u))

    def transform(g):
        # u = ref*s/(1-s), du = ref/(1-s)^2 ds
        def integrand(s):
            u = ref * s / (1.0 - s)
            return g(u) * ref / (1.0 - s) ** 2
        val, _ = quad(integrand, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=500)
        return val

    alpha0 = transform(lambda u: 1.0 / delta(u))
    alphas = [transform(lambda u, i=i: 1.0 / (delta(u) * (s2[i] + u)))
              for i in range(3)]
    return np.array([alpha0, *alphas])


def ellipsoid_rhs(s: EllipsoidState):
    """Acceleration ``Pddot = R (beta/Lambda + gamma0 det(Lambda) dalpha0/dLambda) S^T``.

    The multiplier ``beta`` enforces ``d^2/dt^2 log det P = 0``, i.e.
    ``tr(P^{-1} Pddot) = tr((P^{-1} Pdot)^2)``.  The right-hand side is
    invariant under the SVD's sign/permutation ambiguities because the
    diagonal factor is a symmetric function of the singular values.
    """
    R, sv, Vt = np.linalg.svd(s.P)
    # det R = det S = +1 convention (flip last columns together)
    if np.linalg.det(R) < 0:
        R = R.copy()
        R[:, -1] *= -1
        Vt = Vt.copy()
        Vt[-1, :] *= -1
    alph = gravity_alpha(sv)
    dalpha0 = -sv * alph[1:]                 # d alpha0 / d a_i = -a_i alpha_i
    det_lam = float(np.prod(sv))
    grav_diag = s.gamma0 * det_lam * dalpha0

    Pinv_Pdot = np.linalg.solve(s.P, s.Pdot)
    rhs_tr = float(np.trace(Pinv_Pdot @ Pinv_Pdot))
    # tr(P^{-1} R diag(v) S^T) = sum v_i / a_i
    beta = (rhs_tr - float(np.sum(grav_diag / sv))) / float(np.sum(1.0 / sv ** 2))
    diag = beta / sv + grav_diag
    return R @ np.diag(diag) @ Vt, beta


def integrate_ellipsoid(s: EllipsoidState, t_end: float, rtol=1e-11, atol=1e-13,
                        target_times=()):
    """Evolve the ellipsoid ODE; returns (final state, sampled states)."""

    def f(t, y):
        st = EllipsoidState(y[:9].reshape(3, 3), y[9:].reshape(3, 3),
                            s.gamma0, t)
        acc, _ = ellipsoid_rhs(st)
        return np.concatenate([st.Pdot.ravel(), acc.ravel()])

    samples = []

    def grab(t, y):
        samples.append(EllipsoidState(y[:9].reshape(3, 3).copy(),
                                      y[9:].reshape(3, 3).copy(), s.gamma0, t))

    y0 = np.concatenate([s.P.ravel(), s.Pdot.ravel()])
    res = integrate_adaptive(f, s.t, y0, t_end, rtol=rtol, atol=atol,
                             target_times=target_times, on_target=grab)
    final = EllipsoidState(res.y[:9].reshape(3, 3).copy(),
                           res.y[9:].reshape(3, 3).copy(), s.gamma0, res.t)
    return final, samples


def dedekind_residual(s: EllipsoidState) -> float:
    """Transpose-symmetry defect ``|rhs(P)^T - rhs(P^T)|`` (zero in exact arithmetic)."""
    acc, _ = ellipsoid_rhs(s)
    acc_t, _ = ellipsoid_rhs(EllipsoidState(s.P.T.copy(), s.Pdot.T.copy(),
                                            s.gamma0, s.t))
    return float(np.abs(acc.T - acc_t).max())


# ---------------------------------------------------------------------------
# ballistic interfaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BallisticCusp:
    """Horizontal ballistic surface ``z = t u + 1/(u + i)``; cusp at t = -1."""

    u_window: float = 8.0


@dataclass(frozen=True)
class BallisticCavity:
    """Collapsing cavity ``z = V t + 4 a V/(1 - b^4 V^4)`` on ``|V| = 1``."""

    a: float = 0.2
    b: float = 1.2

    def __post_init__(self):
        if abs(self.b ** 4 - 1.0) < 1e-12:
            raise ValueError("b^4 = 1 degenerates the velocity map")

    def g(self, v):
        return 4.0 * self.a * v / (1.0 - self.b ** 4 * v ** 4)

    def g_prime(self, v):
        b4 = self.b ** 4
        return 4.0 * self.a * (1.0 + 3.0 * b4 * v ** 4) / (1.0 - b4 * v ** 4) ** 2


def ballistic_boundary(fam, t: float, n: int = 2048) -> np.ndarray:
    """Free-surface samples of a ballistic family at time ``t``."""
    if isinstance(fam, BallisticCusp):
        u = np.linspace(-fam.u_window, fam.u_window, n)
        return t * u + u / (u ** 2 + 1.0) - 1j / (u ** 2 + 1.0)
    if isinstance(fam, BallisticCavity):
        v = np.exp(2j * np.pi * np.arange(n) / n)
        return v * t + fam.g(v)
    raise TypeError(f"unknown ballistic family {type(fam).__name__}")


def ballistic_singularity_time(fam: BallisticCavity) -> float:
    """Parametrization degeneracy time ``-G'(1)`` of the cavity family."""
    if not isinstance(fam, BallisticCavity):
        raise TypeError("singularity time is defined for the cavity family")
    return float(-fam.g_prime(1.0))


def _curve_min_gap(z: np.ndarray, arc_factor: float = 4.0) -> float:
    """Minimum distance between points far apart along the (closed) curve."""
    from scipy.spatial import cKDTree

    pts = np.column_stack([z.real, z.imag])
    seg = np.abs(np.diff(z, append=z[:1]))
    total = seg.sum()
    arc = np.concatenate([[0.0], np.cumsum(seg)[:-1]])
    tree = cKDTree(pts)
    # probe radius: grow until some admissible pair appears
    r = max(4.0 * np.median(seg), 1e-12)
    while True:
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
        if r > 4.0 * total:
            return np.inf


def cavity_splash_time(fam: BallisticCavity, t_lo: float, t_hi: float,
                       n: int = 4096, tol: float = 1e-6) -> float:
    """First time (moving up from t_lo) the cavity boundary self-intersects.

    Bisection on the sign of the non-local minimum gap of the sampled curve.
    """
    def touches(t):
        gap = _curve_min_gap(ballistic_boundary(fam, t, n))
        return gap < 1e-3 * abs(t_hi - t_lo)

    if touches(t_lo):
        raise ValueError("curve already self-intersects at t_lo")
    if not touches(t_hi):
        raise ValueError("curve does not self-intersect by t_hi")
    lo, hi = t_lo, t_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if touches(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def cusp_tip_exponent(fam: BallisticCusp, t: float = -1.0,
                      u_fit=(1e-4, 1e-2), n: int = 200) -> float:
    """Fitted exponent of ``y + 1`` against ``|x|`` near the cusp tip."""
    u = np.geomspace(u_fit[0], u_fit[1], n)
    z = t * u + u / (u ** 2 + 1.0) - 1j / (u ** 2 + 1.0)
    x = np.abs(z.real)
    y = z.imag + 1.0
    slope = np.polyfit(np.log(x), np.log(y), 1)[0]
    return float(slope)

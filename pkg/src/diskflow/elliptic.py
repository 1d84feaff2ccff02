"""Jacobi elliptic machinery for the exact ellipse-to-disk map.

The map is parametrized by the nome ``q = ((a-b)/(a+b))**2`` of the ellipse.
From the nome we build the modulus ``k(q)`` by theta-function series, the
quarter period ``K`` by the arithmetic-geometric mean, and ``sn`` for complex
argument by a descending Landen (Gauss) transformation iterated to machine
precision.  No special-function library is involved, so every piece is
independently testable against quadrature and the degenerate case ``q = 0``
where ``sn`` collapses to ``sin``.
"""

from __future__ import annotations

import numpy as np

__all__ = ["modulus_from_nome", "complete_K", "jacobi_sn", "sn_modulus", "K_modulus"]

_LANDEN_TOL = 1e-15


def modulus_from_nome(q: float) -> float:
    """Elliptic modulus ``k = theta2(q)**2 / theta3(q)**2`` from the nome."""
    if not 0.0 <= q < 1.0:
        raise ValueError(f"nome must lie in [0, 1), got {q}")
    if q == 0.0:
        return 0.0
    # theta2 = 2 q^{1/4} sum q^{n(n+1)},  theta3 = 1 + 2 sum q^{n^2}
    t2 = 0.0
    t3 = 0.0
    n = 0
    while True:
        a2 = q ** (n * (n + 1))
        a3 = q ** ((n + 1) ** 2)
        t2 += a2
        t3 += a3
        n += 1
        if a2 < 1e-18 and a3 < 1e-18:
            break
    theta2 = 2.0 * q ** 0.25 * t2
    theta3 = 1.0 + 2.0 * t3
    return (theta2 / theta3) ** 2


def _landen_ladder(k: float):
    """Descending moduli mu_1, mu_2, ... until below tolerance."""
    if not 0.0 <= k < 1.0:
        raise ValueError(f"modulus must lie in [0, 1), got {k}")
    mus = []
    while k > _LANDEN_TOL:
        kp = np.sqrt(1.0 - k * k)
        k = (1.0 - kp) / (1.0 + kp)
        mus.append(k)
    return mus


def K_modulus(k: float) -> float:
    """Complete elliptic integral K as a Landen product ``(pi/2) prod(1+mu_i)``."""
    out = np.pi / 2.0
    for mu in _landen_ladder(k):
        out *= 1.0 + mu
    return out


def sn_modulus(u, k: float):
    """Jacobi ``sn(u; k)`` for real or complex ``u`` (modulus convention).

    Gauss transformation: with ``mu = (1-k')/(1+k')``,
    ``sn(u; k) = (1+mu) s / (1 + mu s^2)`` where ``s = sn(u/(1+mu); mu)``.
    Iterating drives the modulus to zero where ``sn = sin``.
    """
    u = np.asarray(u, dtype=complex)
    mus = _landen_ladder(k)
    v = u.copy()
    for mu in mus:
        v = v / (1.0 + mu)
    s = np.sin(v)
    for mu in reversed(mus):
        s = (1.0 + mu) * s / (1.0 + mu * s * s)
    return s


def complete_K(q: float) -> float:
    """Quarter period ``K(k(q))`` from the nome."""
    return K_modulus(modulus_from_nome(q))


def jacobi_sn(u, q: float):
    """``sn`` parametrized by the nome ``q`` as in the ellipse-to-disk map."""
    return sn_modulus(u, modulus_from_nome(q))

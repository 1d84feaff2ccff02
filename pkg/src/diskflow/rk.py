"""Embedded adaptive Runge-Kutta core (Dormand-Prince 5(4), FSAL).

Single generic driver shared by the surface evolution, the conic/ellipsoid
trajectory integrators, and anything else that needs tolerance-controlled
explicit stepping.  Steps are clipped to land exactly on requested target
times, so output never depends on interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["StepStats", "IntegrationResult", "StepUnderflowError", "integrate_adaptive"]

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# b5 - b4: error estimator weights (stage 7 = FSAL evaluation at the new point)
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
               -17253 / 339200, 22 / 525, -1 / 40])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


class StepUnderflowError(RuntimeError):
    """Step size collapsed below the resolvable scale: stiffness or blow-up."""

    def __init__(self, t, h):
        self.t = t
        self.h = h
        super().__init__(f"step size underflow at t={t!r} (h={h:.3e})")


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    rhs_evals: int = 0
    min_step: float = np.inf
    max_step: float = 0.0

    def record(self, h: float):
        self.min_step = min(self.min_step, h)
        self.max_step = max(self.max_step, h)


@dataclass
class IntegrationResult:
    t: float
    y: np.ndarray
    reason: str                      # "reached-t-end" | "event" | "step-underflow"
    stats: StepStats
    event: dict | None = None
    times: list = field(default_factory=list)


def _error_norm(err, y_old, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y_old), np.abs(y_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(f, t0, y0, f0, direction, rtol, atol, max_step):
    # Hairer/Norsett/Wanner starting-step heuristic
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * direction * f0
    f1 = f(t0 + h0 * direction, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, max_step)


def integrate_adaptive(f, t0, y0, t_end, *, rtol=1e-9, atol=1e-11,
                       max_step=None, first_step=None, target_times=(),
                       on_target=None, post_accept=None, inspect=None,
                       underflow_factor=1e-14) -> IntegrationResult:
    """Advance ``dy/dt = f(t, y)`` from ``t0`` to ``t_end`` adaptively.

    ``target_times`` are landed on exactly; ``on_target(t, y)`` fires there
    and at ``t_end``.  ``post_accept(t, y) -> y`` may transform the state
    after every accepted step (e.g. spectral filtering).  ``inspect(t, y)``
    may return a ``dict`` describing a terminal event to stop early.
    Integration in either time direction is supported.
    """
    y = np.asarray(y0, dtype=float).copy()
    t = float(t0)
    span = abs(t_end - t0)
    if span == 0.0:
        raise ValueError("empty integration interval")
    direction = 1.0 if t_end > t0 else -1.0
    hmax = span if max_step is None else min(float(max_step), span)

    stats = StepStats()

    def feval(tt, yy):
        stats.rhs_evals += 1
        return np.asarray(f(tt, yy), dtype=float)

    targets = sorted({float(s) for s in target_times
                      if (s - t0) * direction > 1e-300 and (t_end - s) * direction >= 0.0},
                     reverse=(direction < 0))
    targets.append(t_end)

    k = np.empty((7, y.size))
    k[0] = feval(t, y)
    h = first_step if first_step is not None else _initial_step(
        f, t, y, k[0], direction, rtol, atol, hmax)
    h = min(abs(h), hmax)

    result_times = [t]
    next_target = targets.pop(0)

    while True:
        if (t_end - t) * direction <= 0.0:
            return IntegrationResult(t, y, "reached-t-end", stats, times=result_times)
        if h < underflow_factor * span:
            return IntegrationResult(
                t, y, "step-underflow", stats,
                event={"kind": "step-underflow", "t": t, "h": h},
                times=result_times)

        clipped = False
        h_try = h
        if (next_target - (t + direction * h_try)) * direction <= 0.0:
            h_try = abs(next_target - t)
            clipped = True

        hd = direction * h_try
        for i in range(1, 6):
            yi = y + hd * sum(a * k[j] for j, a in enumerate(_A[i]))
            k[i] = feval(t + _C[i] * hd, yi)
        y_new = y + hd * (k[:6].T @ _B5[:6])
        k[6] = feval(t + hd, y_new)
        err = hd * (k.T @ _E)
        enorm = _error_norm(err, y, y_new, rtol, atol)

        if enorm <= 1.0:
            stats.accepted += 1
            stats.record(h_try)
            t_new = next_target if clipped else t + hd
            t, y = t_new, y_new
            if post_accept is not None:
                y2 = post_accept(t, y)
                if y2 is not y:
                    y = y2
                    k[6] = feval(t, y)
            if inspect is not None:
                ev = inspect(t, y)
                if ev is not None:
                    result_times.append(t)
                    return IntegrationResult(t, y, "event", stats, event=ev,
                                             times=result_times)
            hit_target = clipped and abs(t - next_target) == 0.0
            if hit_target:
                result_times.append(t)
                if on_target is not None:
                    on_target(t, y)
                if targets:
                    next_target = targets.pop(0)
            k[0] = k[6]                               # FSAL
            factor = _MAX_FACTOR if enorm == 0.0 else min(
                _MAX_FACTOR, _SAFETY * enorm ** -0.2)
            if clipped:
                # the controller's step estimate survives a target clip
                h = min(h if factor >= 1.0 else h_try * factor, hmax)
            else:
                h = min(h_try * factor, hmax)
        else:
            stats.rejected += 1
            h = h_try * max(_MIN_FACTOR, _SAFETY * enorm ** -0.2)

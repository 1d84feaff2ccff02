"""Adaptive time integration of either formulation with event detection.

`evolve` owns its state for the duration of a run, emits `Frame` snapshots
at a fixed time cadence (plus at events and at the final time) through a
caller-supplied sink, and returns a `TerminationReport` describing why and
where the run stopped.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import diagnostics as diag
from .dynamics import (QUSState, SimState, ZFState, _y0_rate, interface_trace,
                       jacobian_J, rhs_qus, rhs_zf, velocity_trace)
from .grid import tail_energy_fraction
from .rk import IntegrationResult, integrate_adaptive

__all__ = [
    "EventThresholds", "IntegratorConfig", "Frame", "TerminationReport",
    "Event", "detect_events", "evolve",
]


@dataclass(frozen=True)
class EventThresholds:
    """Trip levels for the run-terminating (or advisory) state inspections.

    ``min_J`` bounds ``min_j sqrt(J_j)`` from below; ``neg_mode_energy``
    bounds the spectral tail-energy fraction (analyticity-loss proxy);
    ``min_boundary_gap`` bounds the non-local boundary gap (splash
    indicator), defaulting to five median initial node spacings.
    """

    min_J: float = 1e-10
    neg_mode_energy: float = 1e-8
    min_boundary_gap: float | None = None
    splash_terminal: bool = False


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    max_step: float | None = None
    post_step_filter: bool | None = None    # None: off for primal, on for reciprocal
    frame_interval: float | None = None
    frame_times: tuple = ()
    events: EventThresholds = field(default_factory=EventThresholds)
    check_interval: int = 10                # accepted steps between inspections

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class Event:
    kind: str
    value: float
    location: int | None = None
    terminal: bool = True

    def asdict(self):
        return {"kind": self.kind, "value": self.value,
                "location": self.location, "terminal": self.terminal}


@dataclass(frozen=True)
class Frame:
    """Timestamped snapshot: interface, velocity trace, and diagnostics."""

    t: float
    Z: np.ndarray
    Ubar: np.ndarray
    diagnostics: diag.DiagnosticRecord


@dataclass
class TerminationReport:
    reason: str
    t_final: float
    t_requested: float
    steps_accepted: int
    steps_rejected: int
    rhs_evals: int
    min_step: float
    max_step: float
    event: dict | None = None
    frames_emitted: int = 0
    advisories: list = field(default_factory=list)

    def asdict(self):
        return {
            "reason": self.reason,
            "t_final": self.t_final,
            "t_requested": self.t_requested,
            "steps_accepted": self.steps_accepted,
            "steps_rejected": self.steps_rejected,
            "rhs_evals": self.rhs_evals,
            "min_step": self.min_step,
            "max_step": self.max_step,
            "event": self.event,
            "frames_emitted": self.frames_emitted,
            "advisories": self.advisories,
        }


# ---------------------------------------------------------------------------
# state packing
# ---------------------------------------------------------------------------

def _pack(state: SimState) -> np.ndarray:
    if isinstance(state, ZFState):
        return np.concatenate([state.X, state.Phi, [state.y0]])
    return np.concatenate([state.Q.view(float), state.Ubar.view(float),
                           state.S.view(float)])


def _unpack(state: SimState, t: float, y: np.ndarray) -> SimState:
    n = state.grid.N
    if isinstance(state, ZFState):
        return replace(state, X=y[:n].copy(), Phi=y[n:2 * n].copy(),
                       y0=float(y[2 * n]), t=t)
    q = np.ascontiguousarray(y[0:2 * n]).view(complex)
    u = np.ascontiguousarray(y[2 * n:4 * n]).view(complex)
    s = np.ascontiguousarray(y[4 * n:6 * n]).view(complex)
    return replace(state, Q=q, Ubar=u, S=s, t=t)


def _rhs_vector(state: SimState):
    proto = state

    if isinstance(state, ZFState):
        def f(t, y):
            st = _unpack(proto, t, y)
            xd, pd = rhs_zf(st)
            return np.concatenate([xd, pd, [_y0_rate(st)]])
    else:
        def f(t, y):
            st = _unpack(proto, t, y)
            qd, ud, sd = rhs_qus(st)
            return np.concatenate([qd.view(float), ud.view(float),
                                   sd.view(float)])
    return f


def _filter_state(state: SimState, y: np.ndarray) -> np.ndarray:
    """Apply the grid filter to the whole solution (post-step smoothing)."""
    g = state.grid
    n = g.N
    kr = np.arange(n // 2 + 1)
    rho_r = g.filter.rho(g.h * kr)
    if isinstance(state, ZFState):
        out = y.copy()
        for i in range(2):
            out[i * n:(i + 1) * n] = np.fft.irfft(
                rho_r * np.fft.rfft(y[i * n:(i + 1) * n]), n=n)
        return out
    kc = np.arange(n)
    rho_c = np.where(kc < n // 2, g.filter.rho(g.h * kc), 0.0)
    out = y.copy()
    for i in range(3):
        block = np.ascontiguousarray(y[2 * i * n:2 * (i + 1) * n]).view(complex)
        filt = np.fft.ifft(rho_c * np.fft.fft(block))
        out[2 * i * n:2 * (i + 1) * n] = filt.view(float)
    return out


# ---------------------------------------------------------------------------
# events
# ---------------------------------------------------------------------------

def detect_events(state: SimState,
                  thresholds: EventThresholds = EventThresholds(),
                  gap_threshold: float | None = None) -> list[Event]:
    """Pure inspection of a state against the configured thresholds."""
    events: list[Event] = []
    J = jacobian_J(state, filtered=False)
    sqrtJ = np.sqrt(np.maximum(J, 0.0))
    jmin = int(np.argmin(sqrtJ))
    if sqrtJ[jmin] < thresholds.min_J:
        events.append(Event("jacobian-degeneracy", float(sqrtJ[jmin]), jmin))
    g = state.grid
    if isinstance(state, ZFState):
        tail = max(tail_energy_fraction(state.X, g),
                   tail_energy_fraction(state.Phi, g))
    else:
        tail = max(tail_energy_fraction(state.Q, g),
                   tail_energy_fraction(state.Ubar, g),
                   tail_energy_fraction(state.S, g))
    if tail > thresholds.neg_mode_energy:
        events.append(Event("analyticity-loss", float(tail)))
    gap_thr = gap_threshold if gap_threshold is not None \
        else thresholds.min_boundary_gap
    if gap_thr is not None:
        gap = diag.min_boundary_gap(interface_trace(state))
        if gap < gap_thr:
            events.append(Event("self-intersection", float(gap),
                                terminal=thresholds.splash_terminal))
    return events


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

def evolve(state: SimState, t_end: float, cfg: IntegratorConfig = IntegratorConfig(),
           sink=None) -> tuple[SimState, TerminationReport]:
    """Advance a state to ``t_end`` (or the first terminal event).

    ``sink`` receives `Frame` objects at the configured cadence.  Returns
    the final state and the termination report.
    """
    if t_end <= state.t:
        raise ValueError("t_end must exceed the state time")
    post_filter = cfg.post_step_filter
    if post_filter is None:
        post_filter = isinstance(state, QUSState)

    gap_thr = cfg.events.min_boundary_gap
    if gap_thr is None and (cfg.events.splash_terminal or sink is not None):
        Z0 = interface_trace(state)
        gap_thr = 5.0 * float(np.median(np.abs(np.diff(Z0, append=Z0[:1]))))

    frame_times = set(float(s) for s in cfg.frame_times)
    if cfg.frame_interval:
        k0 = int(np.ceil(state.t / cfg.frame_interval))
        frame_times.update(
            np.arange(k0, int(np.floor(t_end / cfg.frame_interval)) + 1)
            * cfg.frame_interval)
    frame_times = sorted(s for s in frame_times if state.t < s <= t_end)

    frames_emitted = 0
    advisories: list[dict] = []

    def make_frame(st: SimState) -> Frame:
        return Frame(st.t, interface_trace(st), velocity_trace(st),
                     diag.energy(st))

    def on_target(t, y):
        nonlocal frames_emitted
        if sink is not None:
            sink(make_frame(_unpack(state, t, y)))
            frames_emitted += 1

    step_counter = 0

    def inspect(t, y):
        nonlocal step_counter
        step_counter += 1
        if step_counter % cfg.check_interval:
            return None
        st = _unpack(state, t, y)
        evs = detect_events(st, cfg.events, gap_threshold=gap_thr)
        terminal = [e for e in evs if e.terminal]
        if terminal:
            if sink is not None:
                sink(make_frame(st))
            return terminal[0].asdict()
        if evs and not advisories:
            advisories.append({"t": t, **evs[0].asdict()})
        return None

    # emit the initial frame
    if sink is not None:
        sink(make_frame(state))
        frames_emitted += 1

    res: IntegrationResult = integrate_adaptive(
        _rhs_vector(state), state.t, _pack(state), t_end,
        rtol=cfg.rel_tol, atol=cfg.abs_tol, max_step=cfg.max_step,
        target_times=frame_times, on_target=on_target,
        post_accept=(lambda t, y: _filter_state(state, y)) if post_filter else None,
        inspect=inspect)

    final = _unpack(state, res.t, res.y)
    if sink is not None and res.reason == "reached-t-end" \
            and res.t not in frame_times:
        sink(make_frame(final))
        frames_emitted += 1

    report = TerminationReport(
        reason=res.reason, t_final=res.t, t_requested=t_end,
        steps_accepted=res.stats.accepted, steps_rejected=res.stats.rejected,
        rhs_evals=res.stats.rhs_evals,
        min_step=res.stats.min_step if np.isfinite(res.stats.min_step) else 0.0,
        max_step=res.stats.max_step, event=res.event,
        frames_emitted=frames_emitted, advisories=advisories)
    return final, report

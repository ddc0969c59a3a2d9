"""Closed-loop integration with event-localized mode switching.

One run follows the loop: stop once e'Pe drops below the terminal level;
switch modes when the active mode is near its singular set or stalls near
its invariant set; otherwise advance one RK4 step. When a step
crosses a switching surface, the crossing time is bisected to `event_tol`
and the step is cut there, so the trajectory keeps the uniform grid plus
one extra sample per refined event.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionViolation, SingularDenominator, StepTooLarge
from .lyapunov import ControllerSpec, FeedbackLaw, Mode, fractional_channel
from .pauli import bloch_fidelity, bloch_to_density

BALL_SLACK = 1e-3


class PolicyKind(enum.Enum):
    NONE = "none"
    FIXED = "fixed"
    SHRINK = "shrink"


class Trigger(enum.Enum):
    SINGULAR = "singular"
    INVARIANT = "invariant"


@dataclass(frozen=True)
class AffineThreshold:
    """Threshold slope * V + intercept; strictly increasing and positive for V > 0."""

    slope: float
    intercept: float = 0.0

    def __post_init__(self):
        if self.slope < 0 or self.intercept < 0 or (self.slope == 0 and self.intercept == 0):
            raise ValueError(f"invalid shrink threshold {self}")

    def __call__(self, V: float) -> float:
        return self.slope * V + self.intercept


@dataclass(frozen=True)
class SwitchingPolicy:
    kind: PolicyKind = PolicyKind.SHRINK
    kappa: tuple = (0.0018, 0.00021)
    iota: tuple = (0.0047, 0.0001)
    vartheta: tuple = (AffineThreshold(0.0005, 0.0018), AffineThreshold(0.00001, 0.000021))
    varsigma: tuple = (AffineThreshold(0.00008, 0.0047), AffineThreshold(1e-6, 0.0))
    initial_mode: Mode = Mode.MODE1
    terminal_vartheta: float = 1e-8
    min_dwell: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        object.__setattr__(self, "initial_mode", Mode(self.initial_mode))
        object.__setattr__(
            self, "vartheta", tuple(_threshold(x) for x in self.vartheta)
        )
        object.__setattr__(
            self, "varsigma", tuple(_threshold(x) for x in self.varsigma)
        )
        if self.kind is PolicyKind.FIXED and min(*self.kappa, *self.iota) <= 0:
            raise ValueError("fixed thresholds must be positive")
        if not self.terminal_vartheta > 0:
            raise ValueError("terminal_vartheta must be positive")

        if self.kind is PolicyKind.FIXED:
            coeffs = tuple((0.0, k, 0.0, i) for k, i in zip(self.kappa, self.iota))
        elif self.kind is PolicyKind.SHRINK:
            coeffs = tuple(
                (a.slope, a.intercept, b.slope, b.intercept)
                for a, b in zip(self.vartheta, self.varsigma)
            )
        else:
            coeffs = ((0.0, -math.inf, 0.0, -math.inf),) * 2
        object.__setattr__(self, "_coeffs", coeffs)

    def thresholds(self, mode: Mode, V: float):
        """(singular threshold, invariant threshold) for `mode` at Lyapunov value V."""
        a, b, c, d = self._coeffs[mode - 1]
        return a * V + b, c * V + d


def _threshold(x):
    if isinstance(x, AffineThreshold):
        return x
    if isinstance(x, dict):
        return AffineThreshold(**x)
    return AffineThreshold(*x)


@dataclass
class Trajectory:
    t: np.ndarray
    s: np.ndarray
    u: np.ndarray
    V: np.ndarray
    Vdot: np.ndarray
    mode: np.ndarray
    delta_active: np.ndarray
    dt: float
    t_final: float
    # RK4 step sizes and the four stage controls used on each accepted step,
    # so that an independent integrator can replay the same inputs.
    step_h: np.ndarray = field(default_factory=lambda: np.zeros(0))
    stage_u: np.ndarray = field(default_factory=lambda: np.zeros((0, 4, 2)))

    def __len__(self):
        return len(self.t)

    def error_norms(self, s_d) -> np.ndarray:
        return np.linalg.norm(self.s - np.asarray(s_d, dtype=float), axis=1)


@dataclass(frozen=True)
class SwitchEvent:
    m: int
    tau: float
    from_mode: Mode
    to_mode: Mode
    trigger: Trigger
    trigger_value: float


@dataclass
class SwitchLog:
    events: list = field(default_factory=list)

    def __len__(self):
        return len(self.events)

    @property
    def times(self) -> np.ndarray:
        return np.array([ev.tau for ev in self.events])


@dataclass
class RunSummary:
    final_s: np.ndarray
    final_rho: np.ndarray
    fidelity: float
    final_V: float
    switches: int
    min_gap: float
    terminated_early: bool
    reason: str


def dwell_stats(log: SwitchLog, t1: float, t2: float):
    """Switch count on [t1, t2), minimum spacing between switches and mean dwell."""
    if not t1 < t2:
        raise ValueError("need t1 < t2")
    times = log.times
    n = int(np.count_nonzero((times >= t1) & (times < t2)))
    gaps = np.diff(times)
    min_gap = float(gaps.min()) if gaps.size else math.inf
    return n, min_gap, (t2 - t1) / max(n, 1)


def switch_predicate(err, model, ctrl: ControllerSpec, policy: SwitchingPolicy, t: float, mode=None):
    """Trigger raised by the given (or active) mode at one state; singular wins ties."""
    mode = ctrl.active_mode if mode is None else Mode(mode)
    if policy.kind is PolicyKind.NONE:
        return None
    ev = FeedbackLaw(model, ctrl, err.s_d).raw(np.asarray(err.s, dtype=float), mode, t)
    thr_s, thr_i = policy.thresholds(mode, ev[_V])
    if ev[_STATUS] or abs(ev[_D1 + fractional_channel(ctrl.family, mode)]) - thr_s <= 0:
        return Trigger.SINGULAR
    if abs(ev[_VDOT]) - thr_i <= 0:
        return Trigger.INVARIANT
    return None


def _gaps(law, s):
    out = law.raw(s, Mode.MODE1, 0.0)
    return out[7], out[8]


def _lyap(law, s):
    return law.raw(s, Mode.MODE1, 0.0)[5]


# Indices into a kernel evaluation tuple.
_U1, _U2, _V, _VDOT, _D1, _D2, _STATUS = 3, 4, 5, 6, 7, 8, 9


class Simulator:
    """Runs the switching algorithm for one (model, controller, policy) triple."""

    def __init__(self, model, ctrl: ControllerSpec, policy: SwitchingPolicy, s_d):
        self.model = model
        self.ctrl = ctrl
        self.policy = policy
        self.s_d = np.asarray(s_d, dtype=float)
        self.law = FeedbackLaw(model, ctrl, self.s_d)
        self.family = ctrl.family
        self._gap_index = {m: _D1 + fractional_channel(self.family, m) for m in Mode}

    def frac(self, mode) -> int:
        return fractional_channel(self.family, mode)

    def _gap(self, ev, mode) -> float:
        return ev[self._gap_index[mode]]

    def _singular_margin(self, ev, mode) -> float:
        thr_s, _ = self.policy.thresholds(mode, ev[_V])
        return abs(self._gap(ev, mode)) - thr_s

    def _trigger(self, ev, s, mode, t, last_tau):
        """Switch trigger for the active mode at an evaluated state, or None.

        Singular triggers are mandatory. An invariant-set trigger is taken
        only outside the minimum dwell and only when the destination mode is
        not itself inside its singular band.
        """
        if self.policy.kind is PolicyKind.NONE:
            return None
        margin_s = self._singular_margin(ev, mode)
        if ev[_STATUS] or margin_s <= 0:
            return Trigger.SINGULAR, margin_s
        _, thr_i = self.policy.thresholds(mode, ev[_V])
        margin_i = abs(ev[_VDOT]) - thr_i
        if margin_i > 0:
            return None
        if last_tau is not None and t - last_tau < self.policy.min_dwell:
            return None
        if self._singular_margin(ev, mode.other) <= 0:
            return None
        return Trigger.INVARIANT, margin_i

    def _crossed(self, ev0, s1, ev1, mode, t1, last_tau) -> bool:
        """Whether a step ending at s1 left the ball or reached a switching surface."""
        if ev1 is None or not _inside_ball(s1):
            return True
        if ev1[_STATUS] or (self._gap(ev0, mode) > 0) != (self._gap(ev1, mode) > 0):
            return True
        return self._trigger(ev1, s1, mode, t1, last_tau) is not None

    def _advance(self, s, mode, t, h):
        s1, us, status = self.law.rk4(s, mode, t, h)
        if status:
            return None, None, None
        return s1, us, self.law.raw(s1, mode, t + h)

    def localize(self, s, ev, mode, t, h, tol, last_tau):
        """Bisect the step length down to `tol`; returns (lo, hi) bracketing the crossing."""
        lo, hi = 0.0, h
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            s1, _, ev1 = self._advance(s, mode, t, mid)
            if self._crossed(ev, s1, ev1, mode, t + mid, last_tau):
                hi = mid
            else:
                lo = mid
        return lo, hi

    def run(self, s0, t_final: float, dt: float = 1e-4, event_tol: float = 1e-9):
        if not (t_final > 0 and dt > 0 and event_tol > 0):
            raise ValueError("t_final, dt and event_tol must be positive")
        self.ctrl.check_horizon(t_final)
        n_steps = int(math.floor(t_final / dt + 1e-9))
        policy = self.policy
        rec = _Recorder(self)
        s = np.array(s0, dtype=float)
        t, k = 0.0, 0
        mode = policy.initial_mode
        ev = self.law.raw(s, mode, t)
        last_tau = None
        pending = None
        reason = "horizon"

        while True:
            if ev[_V] <= policy.terminal_vartheta:
                rec.row(t, s, mode, ev)
                reason = "terminal"
                break
            trig = self._trigger(ev, s, mode, t, last_tau)
            if trig is None and pending is not None:
                trig = (pending, self._singular_margin(ev, mode))
            pending = None
            if trig is not None:
                try:
                    mode = self._switch(rec.log, s, mode, t, ev, *trig)
                except AssumptionViolation as exc:
                    rec.row(t, s, mode, ev)
                    exc.partial = rec.finish(s, dt, t_final, "assumption_violation")
                    raise
                last_tau = t
                ev = self.law.raw(s, mode, t)
            rec.row(t, s, mode, ev)
            if k >= n_steps:
                break
            t_next = (k + 1) * dt
            h = t_next - t
            s1, us, ev1 = self._advance(s, mode, t, h)
            if not self._crossed(ev, s1, ev1, mode, t_next, last_tau):
                rec.step(h, us)
                s, t, k, ev = s1, t_next, k + 1, ev1
                continue
            lo, hi = self.localize(s, ev, mode, t, h, event_tol, last_tau)
            if policy.kind is PolicyKind.NONE:
                # Without switching the fractional law cannot pass its singular set.
                s1, us, ev1 = self._advance(s, mode, t, lo)
                if lo > 0 and s1 is not None:
                    rec.step(lo, us)
                    s, t, ev = s1, t + lo, ev1
                rec.row(t, s, mode, ev)
                reason = "singular_set"
                break
            s1, us, ev1 = self._advance(s, mode, t, hi)
            if s1 is None or not _inside_ball(s1):
                # The fractional law blew up inside an RK stage: stop just short
                # of it and leave the mode as if the singular band was reached.
                if lo <= 0.0:
                    exc = StepTooLarge(f"integration left the Bloch ball near t = {t:.9g}; reduce dt")
                    exc.partial = rec.finish(s, dt, t_final, "step_too_large")
                    raise exc
                hi = lo
                s1, us, ev1 = self._advance(s, mode, t, hi)
            rec.step(hi, us)
            if self._trigger(ev1, s1, mode, t + hi, last_tau) is None:
                pending = Trigger.SINGULAR
            if h - hi <= event_tol:
                s, t, k, ev = s1, t_next, k + 1, ev1
            else:
                s, t, ev = s1, t + hi, ev1

        return rec.finish(s, dt, t_final, reason)

    def _switch(self, log, s, mode, t, ev, trigger, value):
        dest = mode.other
        ev_dest = self.law.raw(s, dest, t)
        if trigger is Trigger.SINGULAR and self._singular_margin(ev_dest, dest) <= 0:
            raise AssumptionViolation(f"t = {t:.9g}: both modes are inside their singular bands")
        if trigger is Trigger.INVARIANT:
            _, thr_i = self.policy.thresholds(dest, ev[_V])
            if abs(ev_dest[_VDOT]) - thr_i <= 0:
                raise AssumptionViolation(f"t = {t:.9g}: both modes are at their invariant sets")
        log.events.append(SwitchEvent(len(log) + 1, t, mode, dest, trigger, float(value)))
        return dest


class _Recorder:
    def __init__(self, sim):
        self.sim = sim
        self.rows = []
        self.step_h = []
        self.stage_u = []
        self.log = SwitchLog()

    def row(self, t, s, mode, ev):
        u = (ev[_U1], ev[_U2])
        vdot = ev[_VDOT]
        if ev[_STATUS]:
            u, vdot = (math.nan, math.nan), math.nan
        self.rows.append((t, s[0], s[1], s[2], u[0], u[1], ev[_V], vdot, int(mode), abs(self.sim._gap(ev, mode))))

    def step(self, h, us):
        self.step_h.append(h)
        self.stage_u.append(us)

    def finish(self, s, dt, t_final, reason):
        arr = np.array(self.rows, dtype=float).reshape(-1, 10)
        traj = Trajectory(
            t=arr[:, 0],
            s=arr[:, 1:4].copy(),
            u=arr[:, 4:6].copy(),
            V=arr[:, 6].copy(),
            Vdot=arr[:, 7].copy(),
            mode=arr[:, 8].astype(int),
            delta_active=arr[:, 9].copy(),
            dt=dt,
            t_final=t_final,
            step_h=np.array(self.step_h),
            stage_u=np.array(self.stage_u, dtype=float).reshape(-1, 4, 2),
        )
        times = self.log.times
        s_fin = np.array(s, dtype=float)
        summary = RunSummary(
            final_s=s_fin,
            final_rho=bloch_to_density(_clip_ball(s_fin)),
            fidelity=bloch_fidelity(_clip_ball(s_fin), self.sim.s_d),
            final_V=float(arr[-1, 6]),
            switches=len(self.log),
            min_gap=float(np.diff(times).min()) if len(times) > 1 else math.inf,
            terminated_early=reason != "horizon",
            reason=reason,
        )
        return traj, self.log, summary


def _inside_ball(s) -> bool:
    r2 = s[0] * s[0] + s[1] * s[1] + s[2] * s[2]
    return r2 <= (1.0 + BALL_SLACK) ** 2  # False for NaN as well


def _clip_ball(s):
    n = np.linalg.norm(s)
    return s / n if n > 1.0 else s


def step(s, model, ctrl: ControllerSpec, dt: float, s_d, t: float = 0.0, mode=None):
    """Advance the closed loop by one RK4 step in the given (or active) mode."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    mode = ctrl.active_mode if mode is None else Mode(mode)
    law = FeedbackLaw(model, ctrl, s_d)
    out, _, status = law.rk4(np.asarray(s, dtype=float), mode, t, dt)
    if status:
        raise SingularDenominator(f"fractional denominator vanished during the step from t = {t}")
    return out


def simulate(model, s0, s_d, ctrl: ControllerSpec, policy: SwitchingPolicy,
             t_final: float, dt: float = 1e-4, event_tol: float = 1e-9):
    """Integrate the switched closed loop; returns (Trajectory, SwitchLog, RunSummary)."""
    return Simulator(model, ctrl, policy, s_d).run(s0, t_final, dt, event_tol)

"""Lyapunov function and the two families of switching feedback laws.

Each control mode uses one channel to cancel the drift of V (a fractional
law, singular where its denominator e'P K s vanishes) and drives the other
channel bang-bang with gain xi.

    Standard    M1: u1 bang-bang,  u2 fractional     M2: the mirror
    Contractive M1: u1 fractional, u2 bang-bang      M2: the mirror

The contractive laws add Upsilon(t) = -Gamma(t) V + theta_hat to the
fractional numerator.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .errors import BadWeightMatrix, DomainError, SingularDenominator

HARD_GUARD = 1e-12


class Mode(enum.IntEnum):
    MODE1 = 1
    MODE2 = 2

    @property
    def other(self) -> "Mode":
        return Mode.MODE2 if self is Mode.MODE1 else Mode.MODE1


class Family(enum.Enum):
    STANDARD = "standard"
    CONTRACTIVE = "contractive"


def fractional_channel(family: Family, mode: Mode) -> int:
    """0-based index of the channel carrying the drift-cancelling law."""
    if family is Family.CONTRACTIVE:
        return int(mode) - 1
    return int(mode.other) - 1


def bangbang_channel(family: Family, mode: Mode) -> int:
    return 1 - fractional_channel(family, mode)


@dataclass(frozen=True)
class GammaSchedule:
    """Gamma(t) = offset + slope * t, with antiderivative Lambda(0) = 0."""

    offset: float = -1.5
    slope: float = 0.0

    @classmethod
    def constant(cls, k: float) -> "GammaSchedule":
        return cls(offset=-float(k), slope=0.0)

    def __call__(self, t: float) -> float:
        return self.offset + self.slope * t

    def Lambda(self, t: float) -> float:
        return self.offset * t + 0.5 * self.slope * t * t

    def max_on(self, t0: float, t1: float) -> float:
        return max(self(t0), self(t1))


def sign(x: float) -> float:
    if x > 0:
        return 1.0
    if x < 0:
        return -1.0
    return 0.0


def check_weight(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.shape != (3, 3):
        raise BadWeightMatrix(f"P must be 3x3, got {P.shape}")
    if np.max(np.abs(P - P.T)) > 1e-12:
        raise BadWeightMatrix("P must be symmetric")
    if np.linalg.eigvalsh(P).min() <= 0:
        raise BadWeightMatrix("P must be positive definite")
    return P


@dataclass(frozen=True)
class ControllerSpec:
    P: np.ndarray = field(default_factory=lambda: 0.078 * np.eye(3))
    xi: float = 1.0
    family: Family = Family.CONTRACTIVE
    gamma: GammaSchedule = field(default_factory=GammaSchedule)
    theta_hat: float = 0.0
    active_mode: Mode = Mode.MODE1

    def __post_init__(self):
        object.__setattr__(self, "P", check_weight(self.P))
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "active_mode", Mode(self.active_mode))
        if not self.xi > 0:
            raise ValueError(f"xi must be positive, got {self.xi}")
        if self.family is Family.CONTRACTIVE and self.theta_hat < 0:
            warnings.warn(
                f"theta_hat = {self.theta_hat} is negative; the contractive "
                "certificate is stated for theta_hat > 0",
                stacklevel=2,
            )

    def check_horizon(self, t_final: float) -> None:
        if self.family is Family.CONTRACTIVE and self.gamma.max_on(0.0, t_final) >= 0:
            raise DomainError("Gamma(t) must stay negative over [0, T_f]")


@dataclass(frozen=True)
class ErrorState:
    s: np.ndarray
    s_d: np.ndarray

    @property
    def e(self) -> np.ndarray:
        return np.asarray(self.s, dtype=float) - np.asarray(self.s_d, dtype=float)


def lyapunov_value(err: ErrorState, P) -> float:
    P = check_weight(P)
    e = err.e
    return float(e @ P @ e)


def vdot(err: ErrorState, model, P, u) -> float:
    e, s = err.e, np.asarray(err.s, dtype=float)
    Pe = np.asarray(P) @ e
    return float(
        2 * Pe @ (model.A @ s)
        + 2 * Pe @ model.g
        + 2 * u[0] * Pe @ (model.K[0] @ s)
        + 2 * u[1] * Pe @ (model.K[1] @ s)
    )


def delta_gap(err: ErrorState, P, K) -> float:
    return float(abs(err.e @ np.asarray(P) @ np.asarray(K) @ np.asarray(err.s, dtype=float)))


def upsilon(ctrl: ControllerSpec, V: float, t: float) -> float:
    return -ctrl.gamma(t) * V + ctrl.theta_hat


def control(err: ErrorState, model, ctrl: ControllerSpec, t: float, mode: Mode | None = None):
    """Evaluate the active feedback law, returning (u1, u2)."""
    mode = ctrl.active_mode if mode is None else Mode(mode)
    e, s = err.e, np.asarray(err.s, dtype=float)
    P = ctrl.P
    numerator = s @ model.A.T @ P @ e + e @ P @ model.g
    if ctrl.family is Family.CONTRACTIVE:
        numerator += upsilon(ctrl, float(e @ P @ e), t)
    f = fractional_channel(ctrl.family, mode)
    b = 1 - f
    denom = -(e @ P @ model.K[f] @ s)
    if abs(denom) <= HARD_GUARD:
        raise SingularDenominator(f"|e'P K{f + 1} s| = {abs(denom):.3e} at t = {t}")
    u = np.zeros(2)
    u[f] = numerator / denom
    u[b] = -ctrl.xi * sign(e @ P @ model.K[b] @ s)
    return u


def descent_rate(ctrl: ControllerSpec, V: float, t: float, delta_bangbang: float) -> float:
    """Closed-form dV/dt under the active law.

    Substituting the law into dV/dt = 2 e'P(As + g + sum u_r K_r s) gives
    -2 xi |e'P K_b s| for the standard family and
    2 (Gamma V - theta_hat) - 2 xi |e'P K_b s| for the contractive one.
    """
    rate = -2.0 * ctrl.xi * delta_bangbang
    if ctrl.family is Family.CONTRACTIVE:
        rate -= 2.0 * upsilon(ctrl, V, t)
    return rate


class FeedbackLaw:
    """Compiled closed loop used by the integrator hot path.

    Evaluates the same formulas as `control` and `vdot`; tests pin the two
    routes against each other.
    """

    def __init__(self, model, ctrl: ControllerSpec, s_d):
        self.ctrl = ctrl
        self.s_d = np.asarray(s_d, dtype=float)
        self.mats = np.ascontiguousarray(
            np.stack([model.A, model.K[0], model.K[1], ctrl.P]).astype(float)
        )
        self.vecs = np.ascontiguousarray(np.stack([model.g, self.s_d]).astype(float))
        self.prm = np.array(
            [
                ctrl.xi,
                1.0 if ctrl.family is Family.CONTRACTIVE else 0.0,
                ctrl.gamma.offset,
                ctrl.gamma.slope,
                ctrl.theta_hat,
                HARD_GUARD,
            ]
        )

    def evaluate(self, s, mode, t: float):
        """Return (ds, u, V, Vdot, D) with D = (e'P K1 s, e'P K2 s) signed.

        Raises SingularDenominator on the active mode's singular set.
        """
        d0, d1, d2, u1, u2, V, Vdot, D1, D2, status = _kernel.evaluate(
            float(s[0]), float(s[1]), float(s[2]), t, int(mode), self.mats, self.vecs, self.prm
        )
        if status:
            raise SingularDenominator(f"fractional denominator below {HARD_GUARD:g} at t = {t}")
        return (d0, d1, d2), (u1, u2), V, Vdot, (D1, D2)

    def raw(self, s, mode, t):
        return _kernel.evaluate(s[0], s[1], s[2], t, int(mode), self.mats, self.vecs, self.prm)

    def rk4(self, s, mode, t, h):
        return _kernel.rk4(s, t, h, int(mode), self.mats, self.vecs, self.prm)

"""Finite-time stability (FTS) and contractive stability (FTCS) checks.

The sufficient conditions are evaluated as plain arithmetic on the supplied
constants; trajectory verifiers test the defining bounds on simulated runs.
Conventions: c1, c2 bound the squared error norm |e|^2; eta and b1 bound
the plain norm |e|.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import DomainError, WindowOutOfRange
from .lyapunov import GammaSchedule


@dataclass(frozen=True)
class FtsCertificate:
    P: np.ndarray
    alpha: float
    c1: float
    c2: float
    T_f: float
    zeta: float = math.inf
    W: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        for name in ("alpha", "c1", "c2", "T_f", "zeta"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        for name in ("P", "W"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.shape != (3, 3) or np.linalg.eigvalsh(0.5 * (m + m.T)).min() <= 0:
                raise DomainError(f"{name} must be a 3x3 positive definite matrix")
            object.__setattr__(self, name, m)

    @property
    def lambda1(self) -> float:
        return float(np.linalg.eigvalsh(self.P).max())

    @property
    def lambda2(self) -> float:
        return float(np.linalg.eigvalsh(self.P).min())

    @property
    def lambda3(self) -> float:
        return float(np.linalg.eigvalsh(self.W).min())

    @property
    def mu(self) -> float:
        return self.lambda1 / self.lambda2

    def d(self, g) -> float:
        g = np.asarray(g, dtype=float)
        return float(g @ g) * self.T_f


@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    margin: float
    bound: float

    def as_dict(self):
        return {"condition": self.name, "passed": self.passed, "margin": self.margin, "bound": self.bound}


def fts_check(cert: FtsCertificate, g) -> list[ConditionResult]:
    """Evaluate the horizon bound and, when mu > 1, the average-dwell-time bound.

    Returns one ConditionResult per evaluated condition; margins are
    positive when the condition holds with slack.
    """
    l1, l2, l3 = cert.lambda1, cert.lambda2, cert.lambda3
    d = cert.d(g)
    num = l1 * cert.c1 + d * l3
    den = cert.c2 * l2
    if num <= 0 or den <= 0:
        raise DomainError("logarithm argument must be positive")
    horizon = -math.log(num / den) / cert.alpha
    results = [ConditionResult("horizon", cert.T_f <= horizon, horizon - cert.T_f, horizon)]
    if cert.mu > 1.0:
        slack = math.log(l2 * cert.c2) - math.log(num) - cert.alpha * cert.T_f
        if slack <= 0:
            results.append(ConditionResult("dwell", False, -math.inf, math.inf))
        else:
            required = cert.T_f * math.log(cert.mu) / slack
            results.append(ConditionResult("dwell", cert.zeta > required, cert.zeta - required, required))
    return results


@dataclass(frozen=True)
class FtcsCertificate:
    """Inputs of the contractive condition with quadratic comparison functions.

    alpha1(x) = alpha1 * x^2 and alpha2(x) = alpha2 * x^2.
    """

    gamma: GammaSchedule
    theta_hat: float
    alpha1: float
    alpha2: float
    b1: float
    varrho: float
    T_f: float
    eta: float | None = None

    def __post_init__(self):
        if not 0 < self.alpha1 < self.alpha2:
            raise DomainError("need 0 < alpha1 < alpha2")
        if not self.b1 > 0:
            raise DomainError("b1 must be positive")
        if not 0 <= self.varrho < self.T_f:
            raise DomainError("varrho must lie in [0, T_f)")
        if self.eta is not None and not 0 < self.eta < self.b1:
            raise DomainError("need 0 < eta < b1")
        if self.gamma.max_on(0.0, self.T_f) >= 0:
            raise DomainError("Gamma(t) must be negative on [0, T_f]")

    def comparison(self, which: int, x: float) -> float:
        return (self.alpha1 if which == 1 else self.alpha2) * x * x


def decay_integral(gamma: GammaSchedule, varrho: float, t: float) -> float:
    """exp(Lambda(t)) * integral_varrho^t exp(-Lambda(w)) dw, kept in overflow-safe form."""
    if gamma.slope == 0.0:
        k = -gamma.offset
        return -math.expm1(-k * (t - varrho)) / k
    Lt = gamma.Lambda(t)
    val, _ = integrate.quad(lambda w: math.exp(Lt - gamma.Lambda(w)), varrho, t, epsabs=0, epsrel=1e-13)
    return val


def _bracket(cert: FtcsCertificate, t: float) -> float:
    if not cert.varrho <= t <= cert.T_f:
        raise DomainError(f"t = {t} outside [{cert.varrho}, {cert.T_f}]")
    lam = cert.gamma.Lambda
    return (
        math.exp(lam(t) - lam(cert.varrho)) * cert.comparison(2, cert.b1)
        + cert.theta_hat * decay_integral(cert.gamma, cert.varrho, t)
    )


def ftcs_condition(cert: FtcsCertificate, t: float) -> float:
    """Left-hand side of the contractive condition; the certificate holds where it is <= 0."""
    if cert.eta is None:
        raise DomainError("eta is required to evaluate the contractive condition")
    return _bracket(cert, t) - cert.comparison(1, cert.eta)


def ftcs_check(cert: FtcsCertificate, n_grid: int = 1000) -> ConditionResult:
    ts = np.linspace(cert.varrho, cert.T_f, n_grid)
    worst = max(ftcs_condition(cert, float(t)) for t in ts)
    return ConditionResult("contractive", worst <= 0, -worst, 0.0)


def eta_bound(cert: FtcsCertificate, lambda2: float, t: float) -> float:
    """sqrt(bracket / lambda2), the error radius implied at time t."""
    radicand = _bracket(cert, t) / lambda2
    if radicand < 0:
        raise DomainError(f"negative radicand {radicand:.6g}")
    return math.sqrt(radicand)


def verify_fts_trajectory(traj, s_d, c1: float, c2: float) -> bool:
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    sq = traj.error_norms(s_d) ** 2
    return bool(sq[0] < c1 and np.all(sq < c2))


def ftcs_window(varrho: float, T_f: float, convention: str = "absolute"):
    """[varrho, T_f] ("absolute") or [T_f - varrho, T_f] ("trailing")."""
    if convention == "absolute":
        return varrho, T_f
    if convention == "trailing":
        return T_f - varrho, T_f
    raise ValueError(f"unknown window convention {convention!r}")


def max_error_on_window(traj, s_d, varrho, T_f, convention="absolute") -> float:
    lo, hi = ftcs_window(varrho, T_f, convention)
    span = 1e-9 * max(1.0, abs(hi))
    if lo < traj.t[0] - span or hi > traj.t[-1] + span or lo > hi:
        raise WindowOutOfRange(f"window [{lo}, {hi}] outside [{traj.t[0]}, {traj.t[-1]}]")
    mask = (traj.t >= lo - span) & (traj.t <= hi + span)
    return float(traj.error_norms(s_d)[mask].max())


def verify_ftcs_trajectory(traj, s_d, eta, varrho, T_f, convention="absolute") -> bool:
    return max_error_on_window(traj, s_d, varrho, T_f, convention) < eta

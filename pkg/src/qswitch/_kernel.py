"""Compiled closed-loop right-hand side and RK4 step.

Parameters are packed as
    mats = [A, K1, K2, P]            shape (4, 3, 3)
    vecs = [g, s_d]                  shape (2, 3)
    prm  = [xi, contractive, Gamma offset, Gamma slope, theta_hat, guard]
"""
import numpy as np
from numba import njit


@njit(cache=True)
def evaluate(s0, s1, s2, t, mode, mats, vecs, prm):
    A = mats[0]
    K1 = mats[1]
    K2 = mats[2]
    P = mats[3]
    g = vecs[0]
    sd = vecs[1]
    e0 = s0 - sd[0]
    e1 = s1 - sd[1]
    e2 = s2 - sd[2]
    pe0 = P[0, 0] * e0 + P[0, 1] * e1 + P[0, 2] * e2
    pe1 = P[1, 0] * e0 + P[1, 1] * e1 + P[1, 2] * e2
    pe2 = P[2, 0] * e0 + P[2, 1] * e1 + P[2, 2] * e2
    V = e0 * pe0 + e1 * pe1 + e2 * pe2
    a0 = A[0, 0] * s0 + A[0, 1] * s1 + A[0, 2] * s2 + g[0]
    a1 = A[1, 0] * s0 + A[1, 1] * s1 + A[1, 2] * s2 + g[1]
    a2 = A[2, 0] * s0 + A[2, 1] * s1 + A[2, 2] * s2 + g[2]
    p0 = K1[0, 0] * s0 + K1[0, 1] * s1 + K1[0, 2] * s2
    p1 = K1[1, 0] * s0 + K1[1, 1] * s1 + K1[1, 2] * s2
    p2 = K1[2, 0] * s0 + K1[2, 1] * s1 + K1[2, 2] * s2
    q0 = K2[0, 0] * s0 + K2[0, 1] * s1 + K2[0, 2] * s2
    q1 = K2[1, 0] * s0 + K2[1, 1] * s1 + K2[1, 2] * s2
    q2 = K2[2, 0] * s0 + K2[2, 1] * s1 + K2[2, 2] * s2
    drift = pe0 * a0 + pe1 * a1 + pe2 * a2
    D1 = pe0 * p0 + pe1 * p1 + pe2 * p2
    D2 = pe0 * q0 + pe1 * q1 + pe2 * q2
    xi = prm[0]
    numerator = drift
    if prm[1] != 0.0:
        numerator += -(prm[2] + prm[3] * t) * V + prm[4]
        frac_first = mode == 1
    else:
        frac_first = mode == 2
    status = 0
    if frac_first:
        if abs(D1) <= prm[5]:
            status = 1
            u1 = np.nan
        else:
            u1 = -numerator / D1
        u2 = -xi * np.sign(D2)
    else:
        if abs(D2) <= prm[5]:
            status = 1
            u2 = np.nan
        else:
            u2 = -numerator / D2
        u1 = -xi * np.sign(D1)
    d0 = a0 + u1 * p0 + u2 * q0
    d1 = a1 + u1 * p1 + u2 * q1
    d2 = a2 + u1 * p2 + u2 * q2
    Vdot = 2.0 * (pe0 * d0 + pe1 * d1 + pe2 * d2)
    return d0, d1, d2, u1, u2, V, Vdot, D1, D2, status


@njit(cache=True)
def rk4(s, t, h, mode, mats, vecs, prm):
    """One RK4 step; the feedback law is re-evaluated at every stage.

    Returns (new state, stage controls (4, 2), status) with status 1 when a
    stage hit the singular guard.
    """
    us = np.empty((4, 2))
    k = np.empty((4, 3))
    x = s.copy()
    coef = (0.0, 0.5, 0.5, 1.0)
    for i in range(4):
        if i > 0:
            for j in range(3):
                x[j] = s[j] + coef[i] * h * k[i - 1, j]
        d0, d1, d2, u1, u2, _, _, _, _, status = evaluate(
            x[0], x[1], x[2], t + coef[i] * h, mode, mats, vecs, prm
        )
        if status != 0:
            return s.copy(), us, 1
        k[i, 0] = d0
        k[i, 1] = d1
        k[i, 2] = d2
        us[i, 0] = u1
        us[i, 1] = u2
    out = np.empty(3)
    for j in range(3):
        out[j] = s[j] + h / 6.0 * (k[0, j] + 2.0 * k[1, j] + 2.0 * k[2, j] + k[3, j])
    return out, us, 0

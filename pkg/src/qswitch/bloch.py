"""Affine Bloch-vector control system built from Hamiltonian/Lindblad data.

The open-qubit master equation

    drho/dt = -i[H0 + u1 H1 + u2 H2, rho] + sum_j gamma_j D[L_j](rho)

maps one-to-one onto ds/dt = A s + u1 K1 s + u2 K2 s + g. `build_system`
produces (A, K1, K2, g) from Pauli coefficients; `lindblad_rhs` evaluates
the matrix form directly and serves as an independent check of it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonHermitianInput, NonPositiveRate
from .pauli import HERMITIAN_TOL, LEVI_CIVITA, as_matrix, check_density, pauli_coefficients

G_IMAG_TOL = 1e-12


@dataclass(frozen=True)
class Channel:
    L: np.ndarray
    gamma: float


@dataclass(frozen=True)
class OpenSystemSpec:
    H0: np.ndarray
    controls: tuple
    channels: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "H0", _hermitian(self.H0, "H0"))
        if len(self.controls) != 2:
            raise ValueError(f"exactly two control Hamiltonians required, got {len(self.controls)}")
        object.__setattr__(
            self,
            "controls",
            tuple(_hermitian(h, f"controls[{r}]") for r, h in enumerate(self.controls)),
        )
        chans = []
        for j, ch in enumerate(self.channels):
            if not isinstance(ch, Channel):
                ch = Channel(*ch)
            if not ch.gamma > 0:
                raise NonPositiveRate(f"channels[{j}].gamma must be positive, got {ch.gamma}")
            chans.append(Channel(as_matrix(ch.L), float(ch.gamma)))
        object.__setattr__(self, "channels", tuple(chans))


def _hermitian(m, name):
    m = as_matrix(m)
    if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
        raise NonHermitianInput(f"{name} is not Hermitian")
    return m


@dataclass(frozen=True)
class SystemModel:
    """ds/dt = A s + u1 K[0] s + u2 K[1] s + g."""

    A: np.ndarray
    K: tuple
    g: np.ndarray

    @property
    def K1(self):
        return self.K[0]

    @property
    def K2(self):
        return self.K[1]


def _rotation_generator(h):
    # M_lm = 2 sum_p h_p eps_{p m l}
    return 2.0 * np.einsum("p,pml->lm", np.real(h), LEVI_CIVITA)


def build_system(spec: OpenSystemSpec) -> SystemModel:
    h0 = pauli_coefficients(spec.H0).c
    A = _rotation_generator(h0)
    g = np.zeros(3, dtype=complex)
    for ch in spec.channels:
        coeffs = pauli_coefficients(ch.L)
        beta = coeffs.c
        # An identity component a*I of L acts as the Hamiltonian (i/2)(conj(a) B - a B^dag).
        if abs(coeffs.c0) > 0.0:
            b = ch.L - coeffs.c0 * np.eye(2)
            h_eff = 0.5j * ch.gamma * (np.conj(coeffs.c0) * b - coeffs.c0 * b.conj().T)
            A += _rotation_generator(pauli_coefficients(h_eff).c)
        outer = np.outer(beta, beta.conj())
        sym = (outer + outer.T).real
        A += ch.gamma * (sym - np.diag(np.diag(sym)))
        mag = np.abs(beta) ** 2
        A -= 2.0 * ch.gamma * np.diag(mag.sum() - mag)
        g += 2j * ch.gamma * np.einsum("m,p,mpl->l", beta, beta.conj(), LEVI_CIVITA)
    if np.max(np.abs(g.imag)) > G_IMAG_TOL:
        raise NonHermitianInput("drift vector g has an imaginary residue")
    K = tuple(_rotation_generator(pauli_coefficients(h).c) for h in spec.controls)
    return SystemModel(A=A, K=K, g=g.real.copy())


def bloch_rhs(s, model: SystemModel, u) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return model.A @ s + u[0] * (model.K[0] @ s) + u[1] * (model.K[1] @ s) + model.g


def dissipator(L, rho):
    LdL = L.conj().T @ L
    return L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL)


def lindblad_rhs_unchecked(rho, spec: OpenSystemSpec, u) -> np.ndarray:
    H = spec.H0 + u[0] * spec.controls[0] + u[1] * spec.controls[1]
    out = -1j * (H @ rho - rho @ H)
    for ch in spec.channels:
        out = out + ch.gamma * dissipator(ch.L, rho)
    return out


def lindblad_rhs(rho, spec: OpenSystemSpec, u) -> np.ndarray:
    return lindblad_rhs_unchecked(check_density(rho), spec, u)

"""Pauli-basis algebra for a single qubit.

Conversions between 2x2 density matrices and real Bloch vectors, plus the
state functionals used to score a run (fidelity, purity).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPhysicalState

I2 = np.eye(2, dtype=complex)
SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

# Levi-Civita symbol epsilon[m, n, l] and Kronecker delta (0-based indices).
LEVI_CIVITA = np.zeros((3, 3, 3))
for _m, _n, _l in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_m, _n, _l] = 1.0
    LEVI_CIVITA[_n, _m, _l] = -1.0
KRONECKER = np.eye(3)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-12
BLOCH_TOL = 1e-9


@dataclass(frozen=True)
class PauliCoefficients:
    """M = c0 * I + sum_v c[v] * sigma_v."""

    c0: complex
    c: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.c0 * I2 + np.einsum("v,vij->ij", self.c, SIGMA)


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {a.shape}")
    return a


def check_density(rho, *, tol: float = PSD_TOL) -> np.ndarray:
    """Validate a density matrix and return it as a complex array.

    Raises NonPhysicalState when rho is not Hermitian, not unit trace, or
    has an eigenvalue below -tol.
    """
    rho = as_matrix(rho)
    if (
        abs(rho[1, 0] - np.conj(rho[0, 1])) > HERMITIAN_TOL
        or abs(rho[0, 0].imag) > HERMITIAN_TOL
        or abs(rho[1, 1].imag) > HERMITIAN_TOL
    ):
        raise NonPhysicalState("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > TRACE_TOL:
        raise NonPhysicalState(f"trace {np.trace(rho).real:.15g} != 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise NonPhysicalState("density matrix is not positive semidefinite")
    return rho


def density_to_bloch(rho) -> np.ndarray:
    rho = check_density(rho)
    s = np.einsum("ij,vji->v", rho, SIGMA)
    if np.max(np.abs(s.imag)) > 1e-12:
        raise NonPhysicalState("Bloch components have an imaginary residue")
    return s.real.copy()


def bloch_to_density(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {s.shape}")
    if np.linalg.norm(s) > 1.0 + BLOCH_TOL:
        raise NonPhysicalState(f"|s| = {np.linalg.norm(s):.12g} > 1")
    return 0.5 * (I2 + np.einsum("v,vij->ij", s, SIGMA))


def pauli_coefficients(m) -> PauliCoefficients:
    """Expand an arbitrary 2x2 matrix in the {I, sigma_1, sigma_2, sigma_3} basis.

    Uses the normalized projection c_v = tr(M sigma_v) / 2, so that the
    expansion reproduces M exactly.
    """
    m = as_matrix(m)
    c0 = 0.5 * np.trace(m)
    c = 0.5 * np.einsum("ij,vji->v", m, SIGMA)
    return PauliCoefficients(c0=complex(c0), c=c)


def fidelity(rho, rho_d) -> float:
    """Uhlmann fidelity in its qubit closed form, tr(rho rho_d) + 2 sqrt(det rho det rho_d)."""
    rho = check_density(rho)
    rho_d = check_density(rho_d)
    overlap = np.trace(rho @ rho_d).real
    dets = max(np.linalg.det(rho).real, 0.0) * max(np.linalg.det(rho_d).real, 0.0)
    return float(np.clip(overlap + 2.0 * np.sqrt(dets), 0.0, 1.0))


def bloch_fidelity(s, s_d) -> float:
    """Same functional as `fidelity`, evaluated directly on Bloch vectors."""
    s = np.asarray(s, dtype=float)
    s_d = np.asarray(s_d, dtype=float)
    det = max(0.25 * (1.0 - s @ s), 0.0) * max(0.25 * (1.0 - s_d @ s_d), 0.0)
    return float(np.clip(0.5 * (1.0 + s @ s_d) + 2.0 * np.sqrt(det), 0.0, 1.0))


def purity(rho) -> float:
    rho = check_density(rho)
    return float(np.trace(rho @ rho).real)

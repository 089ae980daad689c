"""Dirac matrices, the free momentum-space Hamiltonian and its eigensystem.

All functions accept either a single 3-vector ``q`` or a stack of them with
shape ``(..., 3)`` and broadcast accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularShell

SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)
BETA = np.block([[I2, np.zeros((2, 2))], [np.zeros((2, 2)), -I2]]).astype(complex)
ALPHA = np.array(
    [np.block([[np.zeros((2, 2)), s], [s, np.zeros((2, 2))]]) for s in SIGMA],
    dtype=complex,
)


@dataclass(frozen=True)
class DiracAlgebra:
    """Container for the Dirac-representation matrices."""

    alpha: np.ndarray = ALPHA
    beta: np.ndarray = BETA
    sigma: np.ndarray = SIGMA

    def anticommutator(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a @ b + b @ a


@dataclass(frozen=True)
class FreeEigensystem:
    eigenvalues: np.ndarray  # (..., 4), ordered (-, -, +, +)
    z0: np.ndarray  # (..., 4, 4), columns are the normalized eigenvectors
    d: np.ndarray  # (..., 4, 4) diagonal matrix of eigenvalues


def alpha_dot(v: np.ndarray) -> np.ndarray:
    """Return ``v . alpha`` for a stack of 3-vectors, shape ``(..., 4, 4)``."""
    v = np.asarray(v)
    return np.einsum("...k,kij->...ij", v, ALPHA)


def sigma_dot(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    return np.einsum("...k,kij->...ij", v, SIGMA)


def dirac_h0(q: np.ndarray, m: float) -> np.ndarray:
    """Free Dirac Hamiltonian ``m beta + alpha . q`` in momentum space."""
    if m <= 0:
        raise ValueError("mass must be positive")
    q = np.asarray(q, dtype=float)
    return m * BETA + alpha_dot(q)


def free_energy(q: np.ndarray, m: float) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.sqrt(m * m + np.sum(q * q, axis=-1))


def dirac_eigensystem(q: np.ndarray, m: float) -> FreeEigensystem:
    """Eigenvalues and unitary eigenvector matrix of ``dirac_h0(q, m)``.

    Columns are built from the two-spinor closed form, which stays regular at
    ``q = 0``:

    * positive energy, ``chi`` in {(1,0), (0,1)}:
      ``[(E+m) chi, (sigma.q) chi] / sqrt(2E(E+m))``
    * negative energy: ``[-(sigma.q) chi, (E+m) chi] / sqrt(2E(E+m))``

    Column order is (-, chi=(1,0)), (-, chi=(0,1)), (+, chi=(1,0)),
    (+, chi=(0,1)).
    """
    if m <= 0:
        raise ValueError("mass must be positive")
    q = np.asarray(q, dtype=float)
    energy = free_energy(q, m)
    sq = sigma_dot(q)
    norm = np.sqrt(2.0 * energy * (energy + m))[..., None, None]
    epm = (energy + m)[..., None, None] * I2
    upper_pos, lower_pos = epm, sq
    upper_neg, lower_neg = -sq, epm
    neg = np.concatenate([upper_neg, lower_neg], axis=-2)
    pos = np.concatenate([upper_pos, lower_pos], axis=-2)
    z0 = np.concatenate([neg, pos], axis=-1) / norm
    eig = np.stack([-energy, -energy, energy, energy], axis=-1)
    d = eig[..., :, None] * np.eye(4)
    return FreeEigensystem(eigenvalues=eig, z0=z0, d=d.astype(complex))


def spinor(q: np.ndarray, m: float, channel: int) -> np.ndarray:
    """Normalized free spinor for channel ``n`` in 1..4 (column ``n-1`` of z0)."""
    if channel not in (1, 2, 3, 4):
        raise ValueError(f"channel must be 1..4, got {channel}")
    return dirac_eigensystem(q, m).z0[..., channel - 1]


def closed_form_basis(q: np.ndarray, m: float) -> np.ndarray:
    """Unnormalized eigenvectors in the closed form that is singular at q=0.

    Columns are ordered as the channels 1..4. Only used to cross-check the
    eigenspaces produced by :func:`dirac_eigensystem`; requires ``|q| > 0``.
    """
    q = np.asarray(q, dtype=float)
    q1, q2, q3 = q
    lam3 = float(free_energy(q, m))
    if np.linalg.norm(q) == 0:
        raise SingularShell("closed-form eigenvectors are singular at q = 0")
    a = m + lam3
    b = m - lam3
    g1 = [(-q1 + 1j * q2) / a, q3 / a, 0, 1]
    g2 = [-q3 / a, (-q1 - 1j * q2) / a, 1, 0]
    g3 = [(-q1 + 1j * q2) / b, q3 / b, 0, 1]
    g4 = [-q3 / b, (-q1 - 1j * q2) / b, 1, 0]
    return np.array([g1, g2, g3, g4], dtype=complex).T


def eigenspace_projectors(vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal projectors onto span of columns (0,1) and (2,3)."""
    out = []
    for cols in ((0, 1), (2, 3)):
        a = vectors[:, cols]
        qmat, _ = np.linalg.qr(a)
        out.append(qmat @ qmat.conj().T)
    return out[0], out[1]


def energy_projector(q: np.ndarray, m: float, sign: int) -> np.ndarray:
    """Projector onto the eigenspace of ``H0(q)`` with eigenvalue ``sign*E``."""
    e = free_energy(q, m)[..., None, None]
    return 0.5 * (I4 + sign * dirac_h0(q, m) / e)


def kappa(mu: complex, m: float) -> complex:
    """Momentum ``sqrt(mu^2 - m^2)`` on the physical (outgoing) branch.

    For complex ``mu`` the root with ``Im kappa > 0`` is returned, so
    ``exp(i kappa |r|)`` decays in either half plane (the resolvent kernel). Real ``mu`` is treated as the
    limit from the upper half plane: ``kappa >= 0`` for ``mu >= m``,
    ``kappa <= 0`` for ``mu <= -m`` and ``kappa = i sqrt(m^2 - mu^2)`` in the gap.
    """
    mu = complex(mu)
    if mu.imag == 0.0:
        lam = mu.real
        if lam >= m:
            return complex(np.sqrt(lam * lam - m * m))
        if lam <= -m:
            return complex(-np.sqrt(lam * lam - m * m))
        return 1j * np.sqrt(m * m - lam * lam)
    k = np.sqrt(mu * mu - m * m + 0j)
    if k.imag < 0:
        k = -k
    return complex(k)


def schrodinger_kappa(energy: complex) -> complex:
    """``sqrt(energy)`` with the same branch conventions as :func:`kappa`."""
    energy = complex(energy)
    if energy.imag == 0.0:
        if energy.real >= 0:
            return complex(np.sqrt(energy.real))
        return 1j * np.sqrt(-energy.real)
    k = np.sqrt(energy)
    if k.imag < 0:
        k = -k
    return complex(k)


def resolvent_free(q: np.ndarray, m: float, mu: complex) -> np.ndarray:
    """``(H0(q) - mu)^{-1}`` via the closed three-term identity.

    ``(H0 - mu)^{-1} = H0^{-1} + H0^{-1} mu^2 / (E^2 - mu^2) + mu / (E^2 - mu^2)``
    with ``E^2 = m^2 + |q|^2``.
    """
    q = np.asarray(q, dtype=float)
    mu = complex(mu)
    e2 = m * m + np.sum(q * q, axis=-1)
    denom = e2 - mu * mu
    if np.any(np.abs(denom) == 0.0):
        raise SingularShell(f"mu={mu} lies on the mass shell |q|^2 = mu^2 - m^2")
    h0 = dirac_h0(q, m)
    h0_inv = h0 / e2[..., None, None]
    return h0_inv + h0_inv * (mu * mu / denom)[..., None, None] + (mu / denom)[..., None, None] * I4

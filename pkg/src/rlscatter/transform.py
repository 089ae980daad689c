"""Generalized eigenfunction transform of spinor fields.

``f_n(k) = (2 pi)^{-3/2} int phi_n(r, k)^* f(r) dr`` with ``phi_n`` the
scattering solution for incident momentum ``k`` in channel ``n`` (energy
``-E(k)`` for ``n = 1, 2`` and ``+E(k)`` for ``n = 3, 4``).  For ``V = 0``
this is the Fourier transform followed by projection on the free spinors,
computed here by FFT; the general path solves the RLS equation per momentum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .algebra import dirac_eigensystem, free_energy
from .dirac import DiracProblem, solve_rls

__all__ = ["FreeTransform", "free_eigen_transform", "eigen_transform", "gaussian_packet", "packet_norm2"]


@dataclass
class FreeTransform:
    """Transform on the reciprocal lattice of a cubic field grid.

    ``values[..., n-1]`` is ``f_n`` at momenta ``k`` of shape ``(n, n, n, 3)``;
    ``dk`` is the reciprocal spacing, so ``sum |values|^2 dk^3`` approximates
    the momentum-space norm.
    """

    k: np.ndarray
    values: np.ndarray
    dk: float

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.dk**3)

    def channel_weights(self) -> np.ndarray:
        """``int |f_n|^2 dk`` per channel."""
        return np.sum(np.abs(self.values) ** 2, axis=(0, 1, 2)) * self.dk**3


def _lattice(n: int, h: float) -> np.ndarray:
    x = h * (np.arange(n) - 0.5 * n + 0.5)
    return np.stack(np.meshgrid(x, x, x, indexing="ij"), -1)


def free_eigen_transform(field: np.ndarray, h: float, m: float) -> FreeTransform:
    """FFT transform of a spinor field sampled on the centred cubic lattice.

    ``field`` has shape ``(n, n, n, 4)``; node ``i`` sits at
    ``h (i - n/2 + 1/2)`` in each direction.
    """
    field = np.asarray(field, dtype=complex)
    n = field.shape[0]
    if field.shape != (n, n, n, 4):
        raise ValueError("field must have shape (n, n, n, 4)")
    ks = 2.0 * np.pi * sfft.fftfreq(n, d=h)
    k = np.stack(np.meshgrid(ks, ks, ks, indexing="ij"), -1)
    x0 = h * (-0.5 * n + 0.5)
    # sum_r exp(-i k.r) f(r) with r = x0 + h i
    ft = sfft.fftn(field, axes=(0, 1, 2)) * np.exp(-1j * x0 * np.sum(k, axis=-1))[..., None]
    ft *= h**3 / (2.0 * np.pi) ** 1.5
    z0 = dirac_eigensystem(k, m).z0
    vals = np.einsum("...in,...i->...n", np.conj(z0), ft)
    return FreeTransform(k=k, values=vals, dk=2.0 * np.pi / (n * h))


def gaussian_packet(n: int, h: float, carrier: np.ndarray, width: float, spinor: np.ndarray,
                    centre=(0.0, 0.0, 0.0)) -> np.ndarray:
    """``exp(i k0.r - |r - c|^2 / (2 w^2)) u`` on the centred lattice, shape ``(n, n, n, 4)``."""
    r = _lattice(n, h)
    d = r - np.asarray(centre)
    env = np.exp(1j * r @ np.asarray(carrier, float) - 0.5 * np.sum(d * d, -1) / width**2)
    return env[..., None] * np.asarray(spinor, dtype=complex)


def packet_norm2(width: float, spinor: np.ndarray) -> float:
    """Exact ``||f||^2 = pi^{3/2} w^3 |u|^2`` of :func:`gaussian_packet`."""
    return float(np.pi**1.5 * width**3 * np.vdot(spinor, spinor).real)


def eigen_transform(problem: DiracProblem, points: np.ndarray, values: np.ndarray, weight: float,
                    k_points: np.ndarray, channels=(1, 2, 3, 4)) -> np.ndarray:
    """General transform from the scattering solutions, shape ``(K, len(channels))``.

    ``values`` ``(P, 4)`` samples ``f`` at ``points`` with quadrature weight
    ``weight``; ``phi_n`` is evaluated there by the volume formula.  Momenta
    must be nonzero.
    """
    k_points = np.atleast_2d(np.asarray(k_points, float))
    values = np.asarray(values, dtype=complex)
    out = np.zeros((k_points.shape[0], len(channels)), dtype=complex)
    for i, k in enumerate(k_points):
        kn = float(np.linalg.norm(k))
        if kn == 0.0:
            raise ValueError("eigen_transform needs nonzero momenta")
        e = float(free_energy(k, problem.m))
        for sgn, chans in ((-1, [c for c in channels if c in (1, 2)]), (1, [c for c in channels if c in (3, 4)])):
            if not chans:
                continue
            sol = solve_rls(problem, sgn * e, k / kn, channels=tuple(chans))
            phi = sol.phi(points)[:, :, 0, :]  # (P, 4, C)
            proj = np.einsum("pic,pi->c", np.conj(phi), values) * weight / (2.0 * np.pi) ** 1.5
            for c, v in zip(chans, proj):
                out[i, list(channels).index(c)] = v
    return out

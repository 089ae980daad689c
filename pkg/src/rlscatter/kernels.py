"""Translation-invariant kernels of the free resolvents.

Fourier conventions are symmetric, ``F u(r) = (2 pi)^{-3/2} int e^{iqr} u(q) dq``.
With that convention ``B_plus(r, mu) = F[(H0(q) - mu)^{-1}]`` and the
physical free Green kernel of ``(L0 - mu)^{-1}`` is ``(2 pi)^{-3/2} B_plus``.

Partial fractions of ``(H0 - mu)^{-1} = (alpha.q + m beta + mu) / (q^2 - kappa^2)``
give the closed form used here::

    B_plus(r, mu) = sqrt(pi/2) e^{i kappa |r|} / |r|
                    * [m beta + mu + (kappa + i/|r|) alpha.r / |r|]

which reduces to ``Q(r)`` at ``mu = 0`` (``kappa = i m``).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import integrate

from .algebra import BETA, I4, alpha_dot, kappa, schrodinger_kappa
from .errors import BranchError, SingularPoint

SQRT_PI_2 = np.sqrt(np.pi / 2.0)
TWO_PI_32 = (2.0 * np.pi) ** 1.5
# prefactor turning B_plus into the kernel of (L0 - mu)^{-1}
GREEN_PREFACTOR = 1.0 / TWO_PI_32


def _norms(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    d = np.linalg.norm(r, axis=-1)
    if np.any(d == 0.0):
        raise SingularPoint("kernel evaluated at |r| = 0")
    return d


def kernel_j_plus(r: np.ndarray, mu: complex, m: float) -> np.ndarray:
    """``sqrt(pi/2) exp(i kappa |r|) / |r|`` on the outgoing branch."""
    d = _norms(r)
    k = kappa(mu, m)
    return SQRT_PI_2 * np.exp(1j * k * d) / d


def kernel_q(r: np.ndarray, m: float) -> np.ndarray:
    """``Q(r) = F[H0^{-1}(q)]``, shape ``(..., 4, 4)``."""
    d = _norms(r)
    rhat = np.asarray(r, dtype=float) / d[..., None]
    pref = (SQRT_PI_2 * np.exp(-m * d) / d)[..., None, None]
    ad = alpha_dot(rhat)
    return pref * (m * BETA + 1j * np.asarray(m + 1.0 / d)[..., None, None] * ad)


def _b_closed(r: np.ndarray, mu: complex, m: float, k: complex) -> np.ndarray:
    d = _norms(r)
    rhat = np.asarray(r, dtype=float) / d[..., None]
    pref = (SQRT_PI_2 * np.exp(1j * k * d) / d)[..., None, None]
    ad = alpha_dot(rhat)
    return pref * (m * BETA + mu * I4 + np.asarray(k + 1j / d)[..., None, None] * ad)


def kernel_b_plus(r: np.ndarray, mu: complex, m: float) -> np.ndarray:
    """Closed-form ``B_plus(r, mu)`` for ``Im mu >= 0``.

    Real ``mu`` is the boundary value from the upper half plane and must lie
    outside the gap ``[-m, m]``.
    """
    mu = complex(mu)
    if mu.imag < 0:
        raise BranchError("kernel_b_plus needs Im mu >= 0; use kernel_b_minus")
    if mu.imag == 0 and abs(mu.real) <= m:
        raise BranchError(f"real energy {mu.real} lies inside the gap [-{m}, {m}]")
    return _b_closed(r, mu, m, kappa(mu, m))


def kernel_b_minus(u: np.ndarray, lam: complex, m: float) -> np.ndarray:
    """``B_minus(u) = B_plus(-u)^*`` (conjugate transpose)."""
    u = np.asarray(u, dtype=float)
    b = kernel_b_plus(-u, lam, m)
    return np.conj(np.swapaxes(b, -1, -2))


def dirac_green(u: np.ndarray, mu: complex, m: float) -> np.ndarray:
    """Kernel of ``(L0 - mu)^{-1}`` at separation ``u`` for any ``mu`` off the spectrum.

    Real ``mu`` in ``|mu| > m`` is the ``+i0`` boundary value; real ``mu`` in the
    gap and complex ``mu`` in either half plane use the decaying branch.
    """
    mu = complex(mu)
    return GREEN_PREFACTOR * _b_closed(u, mu, m, kappa(mu, m))


def helmholtz_green(u: np.ndarray, energy: complex) -> np.ndarray:
    """``exp(i k |u|) / (4 pi |u|)`` with ``k = sqrt(energy)`` on the outgoing branch."""
    d = _norms(u)
    k = schrodinger_kappa(energy)
    return np.exp(1j * k * d) / (4.0 * np.pi * d)


def kernel_helmholtz(r: np.ndarray, s: np.ndarray, lam: float) -> np.ndarray:
    """Outgoing Helmholtz kernel ``exp(i sqrt(lam)|r-s|) / (4 pi |r-s|)``."""
    return helmholtz_green(np.asarray(r, float) - np.asarray(s, float), lam)


# --- self-cell integrals -------------------------------------------------


@lru_cache(maxsize=None)
def cube_coulomb_constant() -> float:
    """``C0`` with ``int_cube 1/(4 pi |r|) dr = C0 h^2`` for a centred cube of side ``h``.

    The cube splits into 24 congruent pyramids with apex at the centre; in
    each, ``y = x s``, ``z = x t`` leaves the smooth integral of
    ``1/sqrt(1+s^2+t^2)`` over the unit square.
    """
    i2, _ = integrate.dblquad(
        lambda t, s: 1.0 / np.sqrt(1.0 + s * s + t * t), 0.0, 1.0, 0.0, 1.0,
        epsabs=1e-14, epsrel=1e-14,
    )
    return 3.0 * i2 / (4.0 * np.pi)


@lru_cache(maxsize=64)
def _pyramid_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (x + 1.0)
    w = 0.5 * w
    xx, ss, tt = np.meshgrid(u, u, u, indexing="ij")
    ww = w[:, None, None] * w[None, :, None] * w[None, None, :]
    rho = xx * np.sqrt(1.0 + ss * ss + tt * tt)
    return (rho.ravel(), (ww * xx * xx).ravel())


def cube_radial_integral(func, h: float, n: int = 12) -> complex:
    """``int_cube func(|r|) dr`` for a centred cube of side ``h``.

    ``func`` must be smooth as a function of the radius; singular parts are
    handled separately by :func:`cube_coulomb_constant`.
    """
    rho, w = _pyramid_rule(n)
    half = 0.5 * h
    vals = func(half * rho)
    return 24.0 * half**3 * np.sum(w * vals)


def helmholtz_cell_integral(energy: complex, h: float, *, radiative_exact: bool = True) -> complex:
    """``int_cube exp(i k |r|)/(4 pi |r|) dr`` over a centred cube of side ``h``.

    With ``radiative_exact`` and real ``k`` the imaginary part is replaced by
    its point limit ``k h^3 / (4 pi)``; that keeps the discrete on-shell
    operator exactly energy conserving (see ``lattice``).
    """
    k = schrodinger_kappa(energy)
    coul = cube_coulomb_constant() * h * h

    def smooth(rho):
        out = np.empty_like(rho, dtype=complex)
        small = np.abs(k * rho) < 1e-6
        out[~small] = (np.exp(1j * k * rho[~small]) - 1.0) / rho[~small]
        out[small] = 1j * k - 0.5 * k * k * rho[small]
        return out / (4.0 * np.pi)

    val = coul + cube_radial_integral(smooth, h)
    if radiative_exact and k.imag == 0.0:
        val = val.real + 1j * k.real * h**3 / (4.0 * np.pi)
    return complex(val)


def dirac_cell_integral(mu: complex, m: float, h: float, *, radiative_exact: bool = True) -> np.ndarray:
    """Self-cell integral of the Dirac Green kernel over a centred cube.

    The ``alpha.r/|r|`` parts are odd and integrate to zero over the
    symmetric cell, leaving ``(m beta + mu) * int_cube g``.
    """
    mu = complex(mu)
    k = kappa(mu, m)
    # int_cube g with g = exp(i k r)/(4 pi r) depends on k only through k^2 = mu^2 - m^2
    # except for the branch sign, which matters for the radiative part.
    coul = cube_coulomb_constant() * h * h

    def smooth(rho):
        out = np.empty_like(rho, dtype=complex)
        small = np.abs(k * rho) < 1e-6
        out[~small] = (np.exp(1j * k * rho[~small]) - 1.0) / rho[~small]
        out[small] = 1j * k - 0.5 * k * k * rho[small]
        return out / (4.0 * np.pi)

    g = coul + cube_radial_integral(smooth, h)
    if radiative_exact and k.imag == 0.0:
        g = g.real + 1j * k.real * h**3 / (4.0 * np.pi)
    return (m * BETA + mu * I4) * g

"""Independent reference computations for the closed-form kernels.

* :func:`fourier_b_plus` transforms ``(H0(q) - mu)^{-1}`` numerically on a
  periodic momentum lattice.
* :func:`convolution_b_plus` evaluates ``Q + c mu^2 (Q * J_plus) + mu J_plus``
  by adaptive quadrature after reducing the 3D convolution to one dimension.
* :func:`helmholtz_bump_residual` tests ``(-Delta - lam) G = delta`` against a
  smooth bump with a finite-difference Laplacian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
from scipy import integrate

from .algebra import BETA, I4, alpha_dot, kappa, resolvent_free, schrodinger_kappa
from .kernels import GREEN_PREFACTOR, SQRT_PI_2, kernel_b_plus, kernel_j_plus, kernel_q

__all__ = [
    "FourierOracle",
    "fourier_b_plus",
    "fourier_q",
    "lattice_sample_points",
    "convolution_b_plus",
    "kernel_triangle",
    "helmholtz_bump_residual",
    "kernel_norm_integral",
]


@dataclass
class FourierOracle:
    """Lattice values of a numerically transformed kernel.

    ``values[i, j, k]`` is the 4x4 kernel at ``r = dx * (i, j, k)`` with
    indices taken modulo the period.  ``mu_eff`` is the energy actually
    transformed (``mu + i eps`` for real input) and ``sigma`` the width of
    the Gaussian regulator; values are trustworthy for ``|r| >~ 6 sigma``.
    """

    n: int
    length: float
    values: np.ndarray
    mu_eff: complex
    eps: float
    sigma: float

    @property
    def dx(self) -> float:
        return self.length / self.n

    def at(self, points: np.ndarray) -> np.ndarray:
        """Values at lattice points (coordinates must be multiples of ``dx``)."""
        pts = np.atleast_2d(points)
        idx = np.rint(pts / self.dx).astype(int)
        if np.max(np.abs(pts - idx * self.dx)) > 1e-9 * self.dx:
            raise ValueError("sample points must lie on the oracle lattice")
        idx %= self.n
        return self.values[idx[:, 0], idx[:, 1], idx[:, 2]]


def fourier_b_plus(mu: complex, m: float, n: int = 96, length: float = 24.0,
                   sigma_factor: float = 1.45, eps: float | None = None) -> FourierOracle:
    """``(2 pi)^{-3/2} int e^{iqr} (H0(q) - mu)^{-1} dq`` by FFT.

    The slowly decaying symbol is multiplied by ``exp(-sigma^2 q^2 / 2)`` and
    the result by ``exp(sigma^2 kappa^2 / 2)``.  Away from the origin the
    kernel is a combination of outgoing Helmholtz solutions with wavenumber
    ``kappa``, for which this Gaussian smoothing is an exact multiplication,
    so only the short-range part near ``r = 0`` is blurred.

    For real ``mu`` the pole is regularized as ``mu + i eps`` with
    ``eps = 2 dq |mu|`` unless given.
    """
    mu = complex(mu)
    dq = 2.0 * np.pi / length
    if mu.imag == 0.0:
        eps = 2.0 * dq * abs(mu.real) if eps is None else eps
        mu = mu + 1j * eps
    else:
        eps = 0.0 if eps is None else eps
    dx = length / n
    sigma = sigma_factor * dx
    qs = sfft.fftfreq(n, d=dx) * 2.0 * np.pi
    q = np.stack(np.meshgrid(qs, qs, qs, indexing="ij"), -1)
    sym = resolvent_free(q, m, mu) * np.exp(-0.5 * sigma**2 * np.sum(q * q, -1))[..., None, None]
    vals = sfft.ifftn(sym, axes=(0, 1, 2), workers=-1) * (n**3) * dq**3 / (2.0 * np.pi) ** 1.5
    k = kappa(mu, m)
    vals *= np.exp(0.5 * sigma**2 * k * k)
    return FourierOracle(n=n, length=length, values=vals, mu_eff=mu, eps=float(eps), sigma=sigma)


def fourier_q(m: float, **kw) -> FourierOracle:
    """Fourier oracle for ``Q = F[H0^{-1}]`` (``mu = 0``, no regularization of a pole needed)."""
    return fourier_b_plus(0.0, m, **kw)


def lattice_sample_points(count: int, spacing: float, r_min: float, r_max: float,
                          seed: int = 0) -> np.ndarray:
    """Random points on the lattice ``spacing * Z^3`` with ``r_min <= |r| <= r_max``."""
    rng = np.random.default_rng(seed)
    out = []
    lim = int(np.floor(r_max / spacing))
    while len(out) < count:
        p = rng.integers(-lim, lim + 1, size=3) * spacing
        d = np.linalg.norm(p)
        if r_min <= d <= r_max and not any(np.allclose(p, o) for o in out):
            out.append(p)
    return np.array(out)


def _conv_scalars(rho: float, mu: complex, m: float) -> tuple[complex, complex]:
    """``(Q * J_plus)(rho z) = c_beta beta + i c_alpha alpha_3``.

    With ``t = |r - u|`` the angular integral of ``J_plus`` is elementary, which
    leaves a one-dimensional integral over ``u = |u|`` for adaptive quadrature.
    """
    k = kappa(mu, m)
    ik = 1j * k

    def prim0(t):
        return np.exp(ik * t) / ik

    def prim2(t):
        return np.exp(ik * t) * (t * t / ik - 2.0 * t / ik**2 + 2.0 / ik**3)

    def inner(u):
        a, b = abs(rho - u), rho + u
        i0 = prim0(b) - prim0(a)
        i2 = prim2(b) - prim2(a)
        ib = SQRT_PI_2 * i0 / (u * rho)
        ia = SQRT_PI_2 * ((rho * rho + u * u) * i0 - i2) / (2.0 * u * u * rho * rho)
        return ib, ia

    def f_beta(u):
        return 2.0 * np.pi * u * SQRT_PI_2 * m * np.exp(-m * u) * inner(u)[0]

    def f_alpha(u):
        return 2.0 * np.pi * u * SQRT_PI_2 * np.exp(-m * u) * (m + 1.0 / u) * inner(u)[1]

    def cquad(fn):
        tot = 0.0 + 0.0j
        for lo, hi in [(0.0, rho), (rho, rho + 60.0 / m)]:
            re = integrate.quad(lambda u: fn(u).real, lo, hi, limit=400, epsabs=1e-13, epsrel=1e-12)[0]
            im = integrate.quad(lambda u: fn(u).imag, lo, hi, limit=400, epsabs=1e-13, epsrel=1e-12)[0]
            tot += re + 1j * im
        return tot

    return cquad(f_beta), cquad(f_alpha)


def convolution_b_plus(r: np.ndarray, mu: complex, m: float, prefactor: float = GREEN_PREFACTOR) -> np.ndarray:
    """``Q(r) + prefactor mu^2 (Q * J_plus)(r) + mu J_plus(r)`` by direct quadrature.

    ``prefactor`` defaults to ``(2 pi)^{-3/2}``, the value consistent with the
    symmetric Fourier convention.
    """
    r = np.asarray(r, dtype=float)
    rho = float(np.linalg.norm(r))
    rhat = r / rho
    cb, ca = _conv_scalars(rho, complex(mu), m)
    conv = cb * BETA + 1j * ca * alpha_dot(rhat)
    return kernel_q(r, m) + prefactor * complex(mu) ** 2 * conv + complex(mu) * kernel_j_plus(r, mu, m) * I4


def _rel(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


@dataclass
class TriangleReport:
    mu: complex
    points: np.ndarray
    grids: tuple
    closed_vs_conv: np.ndarray  # per point
    closed_vs_fourier: np.ndarray  # (grids, points)
    conv_vs_fourier: np.ndarray  # (grids, points)

    def max_errors(self) -> dict:
        return {
            "closed_vs_conv": float(np.max(self.closed_vs_conv)),
            "closed_vs_fourier": [float(x) for x in np.max(self.closed_vs_fourier, axis=1)],
            "conv_vs_fourier": [float(x) for x in np.max(self.conv_vs_fourier, axis=1)],
        }

    @property
    def improving(self) -> bool:
        e = np.max(self.closed_vs_fourier, axis=1)
        return bool(np.all(np.diff(e) < 0))


def kernel_triangle(mu: complex = 1.5 + 0.5j, m: float = 1.0, count: int = 10, grids=(64, 80, 96),
                    length: float = 24.0, r_min: float = 2.0, r_max: float = 4.5, seed: int = 0) -> TriangleReport:
    """Closed form against both oracles at ``count`` points common to all lattices.

    Points lie on the coarsest common sublattice (spacing ``length/gcd``) so
    each FFT grid samples them exactly.
    """
    step = length / np.gcd.reduce(np.array(grids))
    pts = lattice_sample_points(count, step, r_min, r_max, seed)
    closed = np.array([kernel_b_plus(p, mu, m) for p in pts])
    conv = np.array([convolution_b_plus(p, mu, m) for p in pts])
    cc = np.array([_rel(c, d) for c, d in zip(conv, closed)])
    cf, vf = [], []
    for n in grids:
        orc = fourier_b_plus(mu, m, n=n, length=length)
        four = orc.at(pts)
        cf.append([_rel(f, c) for f, c in zip(four, closed)])
        vf.append([_rel(f, c) for f, c in zip(four, conv)])
    return TriangleReport(mu=complex(mu), points=pts, grids=tuple(grids), closed_vs_conv=cc,
                          closed_vs_fourier=np.array(cf), conv_vs_fourier=np.array(vf))


def helmholtz_bump_residual(lam: float, width: float = 0.5, h: float = 1e-3, r_max: float | None = None) -> float:
    """``|<G, (-Delta - lam) b> - b(0)| / |b(0)|`` for a radial Gaussian bump ``b``.

    The Laplacian of ``b`` is taken by second-order finite differences of
    ``r b(r)``; the pairing with ``G = e^{ikr}/(4 pi r)`` is a radial midpoint sum.
    """
    r_max = 10.0 * width if r_max is None else r_max
    k = schrodinger_kappa(lam)
    r = (np.arange(int(np.ceil(r_max / h))) + 0.5) * h

    def rb(x):
        return x * np.exp(-0.5 * (x / width) ** 2)

    # -Delta b = -(r b)'' / r for radial b
    lap = -(rb(r + h) - 2.0 * rb(r) + rb(r - h)) / (h * h) / r
    lb = lap - lam * np.exp(-0.5 * (r / width) ** 2)
    pairing = np.sum(4.0 * np.pi * r * r * np.exp(1j * k * r) / (4.0 * np.pi * r) * lb) * h
    return float(abs(pairing - 1.0))


def kernel_norm_integral(mu: complex, m: float, radius: float) -> float:
    """``int_{|r| < radius} ||B_plus(r, mu)||_2 dr`` (the norm is radial)."""
    def integrand(t):
        if t == 0.0:
            return 0.0
        b = kernel_b_plus(np.array([0.0, 0.0, t]), mu, m)
        return 4.0 * np.pi * t * t * np.linalg.norm(b, 2)

    edges = np.concatenate([[0.0], np.geomspace(1e-3, radius, 30)])
    return float(sum(integrate.quad(integrand, a, b, limit=200, epsabs=1e-12)[0]
                     for a, b in zip(edges[:-1], edges[1:])))

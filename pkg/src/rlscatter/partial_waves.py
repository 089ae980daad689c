"""Radial reduction for spherically symmetric potentials.

Serves as an independent oracle for the three-dimensional lattice solvers:
phase shifts from outward integration of ``u'' = (l(l+1)/r^2 + V - E) u``,
bound states by shooting against the decaying exterior solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, special
from scipy.optimize import brentq

from .errors import NonRadialPotential

__all__ = ["PartialWaveResult", "partial_wave_oracle", "born_phase_shifts", "bound_states_radial"]

R_START = 1e-6


def _check_radial(potential):
    if not getattr(potential, "is_radial", False):
        raise NonRadialPotential(f"{type(potential).__name__} is not spherically symmetric")


def _breaks(potential, r_max):
    r = getattr(potential, "radius", None)
    pts = [R_START]
    if r is not None and R_START < r < r_max:
        pts.append(float(r))
    pts.append(float(r_max))
    return pts


def _integrate_u(potential, l, energy, r_max):
    """Regular solution ``(u, u')`` at ``r_max``, rescaled on the way to avoid overflow.

    ``energy`` may be an array; all energies are then integrated as one system
    and the result has shape ``(2, n)``.
    """
    e = np.atleast_1d(np.asarray(energy, dtype=float))
    n = e.size

    def rhs(r, y):
        v = float(potential.radial(np.array(r)))
        return np.concatenate([y[n:], (l * (l + 1) / (r * r) + v - e) * y[:n]])

    y = np.concatenate([np.full(n, R_START ** (l + 1)), np.full(n, (l + 1) * R_START**l)])
    pts = _breaks(potential, r_max)
    for a, b in zip(pts[:-1], pts[1:]):
        sol = integrate.solve_ivp(rhs, (a, b), y, method="DOP853", rtol=1e-11, atol=1e-14 * np.max(np.abs(y)))
        y = sol.y[:, -1]
        scale = np.maximum(np.abs(y[:n]), np.abs(y[n:]))
        y = y / np.tile(scale, 2)
    out = y.reshape(2, n)
    return out[:, 0] if np.ndim(energy) == 0 else out


def _default_rmax(potential, floor=1e-12):
    peak = potential.peak()
    if not np.isfinite(peak):
        peak = abs(potential.radial(np.array(0.1)))
    return max(potential.extent(floor * max(peak, 1e-300)), 1.0)


@dataclass
class PartialWaveResult:
    energy: float
    delta: np.ndarray  # delta_l for l = 0..l_max

    @property
    def k(self) -> float:
        return float(np.sqrt(self.energy))

    def amplitude(self, cos_theta: np.ndarray) -> np.ndarray:
        """``f = (1/k) sum (2l+1) e^{i delta} sin(delta) P_l(cos theta)``."""
        ls = np.arange(self.delta.size)
        c = (2 * ls + 1) * np.exp(1j * self.delta) * np.sin(self.delta) / self.k
        return np.polynomial.legendre.legval(np.asarray(cos_theta), c)

    @property
    def sigma_standard(self) -> float:
        """Conventional total cross section for one incident direction."""
        ls = np.arange(self.delta.size)
        return float(4.0 * np.pi / self.energy * np.sum((2 * ls + 1) * np.sin(self.delta) ** 2))

    @property
    def sigma_double(self) -> float:
        """Cross section integrated over incident directions too (``4 pi sigma_standard``)."""
        return 4.0 * np.pi * self.sigma_standard

    @property
    def s_eigenvalues(self) -> np.ndarray:
        return np.exp(2j * self.delta)


def partial_wave_oracle(potential, energy: float, l_max: int, r_max: float | None = None) -> PartialWaveResult:
    """Phase shifts ``delta_0..delta_lmax`` by matching to spherical Bessel functions."""
    _check_radial(potential)
    if energy <= 0:
        raise ValueError("energy must be positive")
    r_max = _default_rmax(potential) if r_max is None else r_max
    k = np.sqrt(energy)
    x = k * r_max
    delta = np.empty(l_max + 1)
    for l in range(l_max + 1):
        u, du = _integrate_u(potential, l, energy, r_max)
        beta = du / u - 1.0 / r_max  # R'/R with R = u/r
        j, dj = special.spherical_jn(l, x), special.spherical_jn(l, x, derivative=True)
        y, dy = special.spherical_yn(l, x), special.spherical_yn(l, x, derivative=True)
        # R ~ j cos(delta) - y sin(delta)
        delta[l] = np.arctan2(k * dj - beta * j, k * dy - beta * y)
    # fold into (-pi/2, pi/2]
    delta = (delta + 0.5 * np.pi) % np.pi - 0.5 * np.pi
    return PartialWaveResult(energy=energy, delta=delta)


def born_phase_shifts(potential, energy: float, l_max: int, r_max: float | None = None) -> np.ndarray:
    """``delta_l^B = -k int V(r) j_l(kr)^2 r^2 dr``."""
    _check_radial(potential)
    r_max = _default_rmax(potential) if r_max is None else r_max
    k = np.sqrt(energy)
    out = np.empty(l_max + 1)
    pts = _breaks(potential, r_max)
    for l in range(l_max + 1):
        tot = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            tot += integrate.quad(
                lambda r: potential.radial(np.array(r)) * special.spherical_jn(l, k * r) ** 2 * r * r,
                a, b, limit=200, epsabs=1e-14, epsrel=1e-11)[0]
        out[l] = -k * tot
    return out


def _wronskian(potential, l, energy, r_match):
    e = np.asarray(energy, dtype=float)
    kb = np.sqrt(-e)
    u, du = _integrate_u(potential, l, e, r_match)
    x = kb * r_match
    kn = special.spherical_kn(l, x)
    dkn = special.spherical_kn(l, x, derivative=True) * kb
    # exterior u = r k_l(kb r)
    ue = r_match * kn
    due = kn + r_match * dkn
    scale = np.hypot(ue, due)
    return (u * due - du * ue) / scale


def bound_states_radial(potential, l_max: int = 3, e_min: float | None = None, r_match: float | None = None,
                        n_scan: int = 400, xtol: float = 1e-13) -> dict:
    """Bound energies per ``l`` by Wronskian matching at ``r_match``.

    Returns ``{l: sorted energies}``; the scan runs over ``(e_min, 0)`` on a grid
    dense near threshold.
    """
    _check_radial(potential)
    if r_match is None:
        r_match = getattr(potential, "radius", None) or _default_rmax(potential, 1e-10)
    if e_min is None:
        peak = potential.peak()
        e_min = -float(peak) if np.isfinite(peak) else -1e3
    out = {}
    t = np.linspace(0.0, 1.0, n_scan + 1)[1:]
    es = e_min * (1.0 - t) ** 2  # from e_min toward 0
    es = es[es < 0]
    for l in range(l_max + 1):
        vals = _wronskian(potential, l, es, r_match)
        roots = []
        for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
            roots.append(brentq(lambda e: _wronskian(potential, l, e, r_match), es[i], es[i + 1], xtol=xtol))
        out[l] = sorted(roots)
    return out

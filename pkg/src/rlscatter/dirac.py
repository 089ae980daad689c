"""Relativistic Lippmann-Schwinger (RLS) scattering for the Dirac operator.

Conventions used throughout:

* free Green kernel ``G = (2 pi)^{-3/2} B_plus`` (the kernel of ``(L0 - lam - i0)^{-1}``),
  so the modified equation reads ``(I + V1 G V1 W1) psi = V1 e^{ik.r} g_n(k)``;
* on-shell momenta are parametrized by their direction, ``q = |kappa| w`` and
  ``k = |kappa| w'``, for both signs of the energy;
* ``A(w) = int exp(-i q.s) V(s) phi(s) ds``; the amplitude vector is
  ``f = -(H0(q) + lam) A / (4 pi)``, the T kernel ``T_sn = (2 pi)^{-3} g_s(q)^* A_n``
  and ``F_p = -4 pi^2 lam T_p``;
* ``S_p = I - i a D^{1/2} T_p D^{1/2}`` with ``a = 2 pi |lam| |kappa|``.

For ``lam > m`` the outgoing wave is ``exp(i|kappa|R)/R f(w)``; for
``lam < -m`` it is ``exp(-i|kappa|R)/R f(-w)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate

from .algebra import dirac_eigensystem, dirac_h0, kappa
from .errors import ChannelMismatch, DegenerateFit, GapEnergy
from .grid import AngularMesh, SupportGrid, support_grid
from .kernels import dirac_cell_integral, dirac_green
from .lattice import LatticeKernel, SandwichOperator
from .potentials import FactorizedPotential, PotentialSpec, factorize_potential
from .smatrix import SMatrixBlock, weight_split

GAMMA_REFERENCE = 2.0**4 * np.pi**5
AMPLITUDE_CONSTANT = -4.0 * np.pi**2  # F_p = AMPLITUDE_CONSTANT * lam * T_p

__all__ = [
    "EnergyShell",
    "DiracProblem",
    "RlsSolution",
    "ChannelAmplitudes",
    "build_rls_operator",
    "solve_rls",
    "dirac_amplitude",
    "on_shell_t_dirac",
    "dirac_cross_sections",
    "gamma_consistency",
    "far_field_check",
    "shell_delta_integral",
    "channels_for",
    "GAMMA_REFERENCE",
]


def channels_for(lam: float) -> tuple[int, int]:
    """Channels carried by the energy sign: (1, 2) below the gap, (3, 4) above."""
    return (1, 2) if lam < 0 else (3, 4)


@dataclass(frozen=True)
class EnergyShell:
    """Kinematics of an on-shell Dirac computation."""

    m: float
    lam: float
    incident: tuple = (0.0, 0.0, 1.0)
    channel: int | None = None

    def __post_init__(self):
        if self.m <= 0:
            raise ValueError("mass must be positive")
        if abs(self.lam) <= self.m:
            raise GapEnergy(f"energy {self.lam} lies in the gap [-{self.m}, {self.m}]")
        if self.channel is not None:
            if self.channel not in (1, 2, 3, 4):
                raise ChannelMismatch(f"channel must be 1..4, got {self.channel}")
            if self.channel not in channels_for(self.lam):
                raise ChannelMismatch(
                    f"channel {self.channel} carries energy of the opposite sign to lambda={self.lam}"
                )
        n = np.linalg.norm(self.incident)
        if not np.isclose(n, 1.0, atol=1e-12):
            raise ValueError("incident direction must be a unit vector")

    @property
    def kappa(self) -> float:
        """``|kappa| = sqrt(lam^2 - m^2)``."""
        return float(np.sqrt(self.lam**2 - self.m**2))

    @property
    def signed_kappa(self) -> float:
        return float(kappa(self.lam, self.m).real)

    @property
    def a(self) -> float:
        """``2 pi sqrt(k^2 + m^2) |k|`` on the shell."""
        return 2.0 * np.pi * abs(self.lam) * self.kappa


@dataclass
class DiracProblem:
    spec: PotentialSpec
    m: float
    h: float
    half_width: float | None = None
    eps_cut: float | None = None
    rel_cut: float = 1e-8
    max_half_width: float = 12.0
    mode: str = "auto"
    n_sub: int | None = None

    @cached_property
    def discretization(self) -> tuple[SupportGrid, np.ndarray, FactorizedPotential]:
        hw = self.half_width
        if hw is None:
            hw = min(max(self.spec.extent(self.rel_cut * self._peak()), self.h), self.max_half_width)
        kw = {} if self.n_sub is None else {"n_sub": self.n_sub}
        grid, vals = support_grid(lambda c, h: self.spec.matrix(c, h, **kw), self.h, hw,
                                  self.eps_cut, self.rel_cut)
        return grid, vals, factorize_potential(vals)

    def _peak(self) -> float:
        probe = np.full((1, 3), 0.5 * self.h)
        v = self.spec.matrix(probe, self.h)
        return max(float(np.linalg.norm(v[0], 2)), 1e-300)

    @property
    def grid(self) -> SupportGrid:
        return self.discretization[0]


def green_kernel(grid: SupportGrid, mu: complex, m: float) -> LatticeKernel:
    return LatticeKernel(grid, lambda u: dirac_green(u, mu, m), dirac_cell_integral(mu, m, grid.h))


def build_k_dirac(mu: complex, m: float, grid: SupportGrid, fact: FactorizedPotential,
                  mode: str = "auto") -> SandwichOperator:
    """``K(mu) = V1 G(mu) V1 W1`` for any ``mu`` off the continuous spectrum."""
    return SandwichOperator(green_kernel(grid, mu, m), fact.v1, fact.v1 @ fact.w1, mode=mode)


def build_rls_operator(shell: EnergyShell, grid: SupportGrid, fact: FactorizedPotential,
                       mode: str = "auto") -> SandwichOperator:
    """Nystrom operator of the modified RLS equation on the energy shell."""
    return build_k_dirac(shell.lam, shell.m, grid, fact, mode)


@dataclass
class RlsSolution:
    """Solutions for a set of incident momenta and channels (one column each)."""

    m: float
    lam: float
    k_vectors: np.ndarray  # (M, 3)
    channels: tuple
    grid: SupportGrid
    fact: FactorizedPotential
    psi: np.ndarray  # (N, 4, M, C)
    operator: SandwichOperator = field(repr=False)

    @property
    def v_phi(self) -> np.ndarray:
        """``V phi = W1 V1 psi``, shape ``(N, 4, M, C)``."""
        wv = self.fact.w1 @ self.fact.v1
        return np.einsum("nij,njmc->nimc", wv, self.psi)

    def incident(self, points: np.ndarray) -> np.ndarray:
        """Plane-wave spinors at points, ``(P, 4, M, C)``."""
        z0 = dirac_eigensystem(self.k_vectors, self.m).z0  # (M, 4, 4)
        g = z0[:, :, [c - 1 for c in self.channels]]  # (M, 4, C)
        phase = np.exp(1j * np.atleast_2d(points) @ self.k_vectors.T)  # (P, M)
        return phase[:, None, :, None] * np.transpose(g, (1, 0, 2))[None]

    def phi(self, points: np.ndarray) -> np.ndarray:
        """``phi(r) = phi0(r) - int G(r - s) V(s) phi(s) ds`` at arbitrary points."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = self.incident(points)
        vphi = self.v_phi * self.grid.weight
        nodes = self.grid.nodes
        n = nodes.shape[0]
        flat = vphi.reshape(n * 4, -1)
        cell = dirac_cell_integral(self.lam, self.m, self.grid.h) / self.grid.weight
        for start in range(0, points.shape[0], 64):
            sl = slice(start, start + 64)
            u = points[sl, None, :] - nodes[None]
            hit = np.all(np.abs(u) < 1e-12 * self.grid.h, axis=-1)
            u[hit] = 1.0
            g = dirac_green(u, self.lam, self.m)  # (p, N, 4, 4)
            # points on a node see the cell average of the kernel
            g[hit] = cell
            g = g.transpose(0, 2, 1, 3).reshape(g.shape[0], 4, n * 4)
            out[sl] -= (g @ flat).reshape(g.shape[0], 4, *vphi.shape[2:])
        return out

    def scattered_coefficients(self, directions: np.ndarray) -> np.ndarray:
        """``A(w) = int exp(-i |kappa| w.s) V phi ds``, shape ``(W, 4, M, C)``."""
        kap = np.sqrt(self.lam**2 - self.m**2)
        phase = np.exp(-1j * kap * np.atleast_2d(directions) @ self.grid.nodes.T)
        return np.einsum("wn,nimc->wimc", phase, self.v_phi) * self.grid.weight


def solve_rls(problem: DiracProblem, lam: float, directions: np.ndarray, channels=None,
              operator: SandwichOperator | None = None, check: bool = True) -> RlsSolution:
    """Solve the modified RLS equation for incident ``k = |kappa| w'`` and channels."""
    grid, _, fact = problem.discretization
    channels = tuple(channels_for(lam)) if channels is None else tuple(channels)
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    for c in channels:
        EnergyShell(problem.m, lam, tuple(directions[0]), c)
    shell = EnergyShell(problem.m, lam)
    op = operator if operator is not None else build_rls_operator(shell, grid, fact, problem.mode)
    kvec = shell.kappa * directions
    sol = RlsSolution(m=problem.m, lam=lam, k_vectors=kvec, channels=channels, grid=grid, fact=fact,
                      psi=None, operator=op)
    phi0 = sol.incident(grid.nodes)  # (N, 4, M, C)
    rhs = np.einsum("nij,njmc->nimc", fact.v1, phi0)
    n = grid.size
    if not np.any(fact.v1):
        sol.psi = np.zeros_like(rhs)
    else:
        x = op.solve(rhs.reshape(n * 4, -1), check=check)
        sol.psi = x.reshape(rhs.shape)
    return sol


@dataclass
class ChannelAmplitudes:
    """Amplitudes on mesh x mesh for the two channels of the energy sign.

    ``f_vec[i, :, j, c]`` is ``f(w_i, w'_j, n_c)``; ``f_proj[i, s, j, c]`` and
    ``F`` (same array) hold ``g_s(q)^* f``.
    """

    lam: float
    m: float
    channels: tuple
    mesh: AngularMesh
    f_vec: np.ndarray  # (M, 4, M, 2)
    F: np.ndarray  # (M, 2, M, 2)
    T: np.ndarray  # (M, 2, M, 2)

    @property
    def f_proj(self) -> np.ndarray:
        return self.F

    @property
    def block_index(self) -> int:
        """``p = 1`` below the gap, ``p = 2`` above."""
        return 1 if self.lam < 0 else 2


def dirac_amplitude(solution: RlsSolution, mesh: AngularMesh) -> ChannelAmplitudes:
    """Amplitude vectors, projected amplitudes ``F_p`` and T kernel ``T_p``."""
    lam, m = solution.lam, solution.m
    kap = np.sqrt(lam**2 - m**2)
    q = kap * mesh.directions
    a_coef = solution.scattered_coefficients(mesh.directions)  # (M, 4, M, C)
    h0 = dirac_h0(q, m) + lam * np.eye(4)
    f_vec = -np.einsum("wij,wjmc->wimc", h0, a_coef) / (4.0 * np.pi)
    z0 = dirac_eigensystem(q, m).z0
    gs = z0[:, :, [c - 1 for c in solution.channels]]  # (M, 4, 2)
    gs_h = np.conj(np.transpose(gs, (0, 2, 1)))  # (M, 2, 4)
    big_f = np.einsum("wsi,wimc->wsmc", gs_h, f_vec)
    t = np.einsum("wsi,wimc->wsmc", gs_h, a_coef) / (2.0 * np.pi) ** 3
    return ChannelAmplitudes(lam=lam, m=m, channels=solution.channels, mesh=mesh,
                             f_vec=f_vec, F=big_f, T=t)


@dataclass
class DiracOnShell:
    shell: EnergyShell
    amplitudes: ChannelAmplitudes
    block: SMatrixBlock

    @property
    def t_operator(self) -> np.ndarray:
        """``a D^{1/2} T_p D^{1/2}`` as a ``2M x 2M`` matrix."""
        return (np.eye(self.block.s.shape[0]) - self.block.s) / (-1j)


def on_shell_t_dirac(shell: EnergyShell, amplitudes: ChannelAmplitudes) -> DiracOnShell:
    """``S_p = I - i a D^{1/2} T_p D^{1/2}`` on the mesh, eigen-decomposed."""
    mesh = amplitudes.mesh
    msize = mesh.size
    tmat = amplitudes.T.reshape(2 * msize, 2 * msize)
    s = np.eye(2 * msize, dtype=complex) - 1j * shell.a * weight_split(tmat, mesh, components=2)
    return DiracOnShell(shell=shell, amplitudes=amplitudes,
                        block=SMatrixBlock.from_s(tmat, s, mesh, components=2))


@dataclass
class DiracCrossSections:
    direct: np.ndarray  # 2x2 matrix sigma_p
    ergodic: np.ndarray  # 2x2 from eigen data with the physical constant
    ergodic_reference: np.ndarray  # 2x2 with (lam gamma)^2
    trace_direct: float
    trace_ergodic: float
    trace_ergodic_reference: float
    normalization: np.ndarray  # Tr int G_j G_j^* per eigenvector

    @property
    def ratio_reference(self) -> float:
        """``Tr sigma_direct / Tr sigma_ergodic_reference``."""
        return self.trace_direct / self.trace_ergodic_reference if self.trace_ergodic_reference else np.nan


def dirac_cross_sections(onshell: DiracOnShell) -> DiracCrossSections:
    """Direct ``int int F F^*`` against the eigenvalue forms."""
    amp = onshell.amplitudes
    mesh = amp.mesh
    w = mesh.weights
    big_f = amp.F  # (M, 2, M, 2)
    direct = np.einsum("i,j,isjn,itjn->st", w, w, big_f, np.conj(big_f))
    blk = onshell.block
    g = blk.eigenfunctions().reshape(mesh.size, 2, -1)  # (M, 2, J)
    dmu = np.abs(blk.eigenvalues - 1.0) ** 2
    gg = np.einsum("i,isj,itj->jst", w, g, np.conj(g))  # (J, 2, 2)
    base = np.einsum("j,jst->st", dmu, gg)
    c_phys = (2.0 * np.pi / onshell.shell.kappa) ** 2
    c_reference = (amp.lam * GAMMA_REFERENCE) ** 2
    return DiracCrossSections(
        direct=direct, ergodic=c_phys * base, ergodic_reference=c_reference * base,
        trace_direct=float(np.trace(direct).real), trace_ergodic=float(c_phys * np.sum(dmu)),
        trace_ergodic_reference=float(c_reference * np.sum(dmu)),
        normalization=np.trace(gg, axis1=1, axis2=2).real,
    )


@dataclass
class GammaFit:
    constant: complex
    residual: float
    correlation: float
    reference_value: float = -GAMMA_REFERENCE

    @property
    def ratio_to_reference(self) -> complex:
        return self.constant / self.reference_value


def gamma_consistency(big_f: np.ndarray, t: np.ndarray, lam: float) -> GammaFit:
    """Least-squares ``c`` in ``F_p = c lam T_p`` over all mesh pairs."""
    x = lam * np.asarray(t).ravel()
    y = np.asarray(big_f).ravel()
    nx = np.linalg.norm(x)
    if nx <= 1e-300 or nx <= 1e-14 * max(np.linalg.norm(y), 1e-300):
        raise DegenerateFit("T_p vanishes; the proportionality constant is undefined")
    c = np.vdot(x, y) / nx**2
    res = np.linalg.norm(y - c * x) / max(np.linalg.norm(y), 1e-300)
    corr = abs(np.vdot(x, y)) / (nx * max(np.linalg.norm(y), 1e-300))
    return GammaFit(constant=complex(c), residual=float(res), correlation=float(corr))


@dataclass
class FarFieldReport:
    radii: np.ndarray
    rho: np.ndarray
    extracted: np.ndarray  # f estimated from the outermost shell, (W, 4)
    amplitude: np.ndarray  # reference f, (W, 4)

    @property
    def decreasing(self) -> bool:
        return bool(np.all(np.diff(self.rho) < 0))

    @property
    def extraction_error(self) -> float:
        return float(np.max(np.linalg.norm(self.extracted - self.amplitude, axis=1))
                     / np.max(np.linalg.norm(self.amplitude, axis=1)))


def far_field_check(solution: RlsSolution, directions: np.ndarray, radii, column=(0, 0)) -> FarFieldReport:
    """Residual of the outgoing-wave expansion on spheres of radius ``R``.

    ``rho(R) = max_w |R (phi(R w) - phi0(R w) - exp(i kappa R) f / R)|`` with
    ``f`` from the volume formula; the estimate
    ``R exp(-i kappa R) (phi - phi0)`` at the largest radius is returned too.
    """
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    lam, m = solution.lam, solution.m
    kap = np.sqrt(lam**2 - m**2)
    sgn = 1.0 if lam > 0 else -1.0
    # momentum direction of the outgoing wave seen at position direction w
    qdir = sgn * directions
    a_coef = solution.scattered_coefficients(qdir)[..., column[0], column[1]]  # (W, 4)
    h0 = dirac_h0(kap * qdir, m) + lam * np.eye(4)
    f = -np.einsum("wij,wj->wi", h0, a_coef) / (4.0 * np.pi)
    rho, extracted = [], None
    for big_r in radii:
        pts = big_r * directions
        scat = solution.phi(pts)[..., column[0], column[1]] - solution.incident(pts)[..., column[0], column[1]]
        ph = np.exp(1j * sgn * kap * big_r)
        rho.append(np.max(np.linalg.norm(big_r * scat - ph * f, axis=1)))
        extracted = big_r * scat / ph
    return FarFieldReport(radii=np.asarray(radii, float), rho=np.asarray(rho), extracted=extracted, amplitude=f)


def shell_delta_integral(k: float, m: float, delta: float) -> float:
    """``int_0^inf 2 delta / (delta^2 + (E(q) - E(k))^2) dq`` with ``E(q) = sqrt(q^2 + m^2)``.

    Substituting ``E = E(k) + delta tan(theta)`` turns the Lorentzian into a
    bounded integrand ``2 dq/dE`` on a finite interval.
    """
    ek = np.sqrt(k * k + m * m)
    lo = np.arctan((m - ek) / delta)

    def integrand(theta):
        e = ek + delta * np.tan(theta)
        return 2.0 * e / np.sqrt(e * e - m * m)

    # dq/dE has an integrable 1/sqrt singularity at the threshold E = m (theta = lo)
    val = 0.0
    for a, b in [(lo, 0.0), (0.0, 0.5 * np.pi)]:
        val += integrate.quad(integrand, a, b, limit=500, epsabs=1e-13, epsrel=1e-12)[0]
    return float(val)


def shell_delta_limit(k: float, m: float) -> float:
    return 2.0 * np.pi * np.sqrt(k * k + m * m) / abs(k)

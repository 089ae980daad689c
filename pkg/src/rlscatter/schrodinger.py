"""Lippmann-Schwinger scattering for ``-Delta + V`` in three dimensions.

The unknown of the modified equation ``(I + K) psi = |V|^{1/2} e^{ik.r}`` lives
on the support of ``V``.  After solving, ``V phi = sgn(V) |V|^{1/2} psi`` gives
the amplitude ``f = -T / (4 pi)`` with
``T(w, w') = int exp(-i sqrt(lam) s.w) V(s) phi(s, sqrt(lam) w') ds`` and the
on-shell scattering matrix ``S = I + (i sqrt(lam) / 2 pi) f``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .grid import AngularMesh, SupportGrid, support_grid
from .kernels import helmholtz_cell_integral, helmholtz_green
from .lattice import LatticeKernel, SandwichOperator
from .smatrix import SMatrixBlock, weight_split

__all__ = [
    "SchrodingerProblem",
    "LSSolution",
    "ScatteringResult",
    "build_k_operator",
    "solve_modified_ls",
    "on_shell_t",
    "s_matrix",
    "cross_section_direct",
    "cross_section_ergodic",
    "ergodic_expansion",
    "born_amplitude",
    "born_amplitude_grid",
    "scatter",
    "s_matrix_mu2",
]


@dataclass
class SchrodingerProblem:
    """Potential family plus discretization parameters.

    ``half_width`` defaults to the radius where ``|V|`` drops below
    ``rel_cut`` times its largest cell value (capped by ``max_half_width``).
    """

    potential: object
    h: float
    half_width: float | None = None
    eps_cut: float | None = None
    rel_cut: float = 1e-8
    max_half_width: float = 12.0
    mode: str = "auto"
    n_sub: int | None = None

    @cached_property
    def discretization(self) -> tuple[SupportGrid, np.ndarray]:
        hw = self.half_width
        if hw is None:
            peak = self.potential.peak()
            if not np.isfinite(peak):
                # singular at the origin: use the average over the centre cells
                peak = abs(self.potential.cell_average(np.full((1, 3), 0.5 * self.h), self.h)[0])
            hw = min(self.potential.extent(self.rel_cut * max(peak, 1e-300)), self.max_half_width)
            hw = max(hw, self.h)
        kw = {} if self.n_sub is None else {"n_sub": self.n_sub}
        return support_grid(lambda c, h: self.potential.cell_average(c, h, **kw),
                            self.h, hw, self.eps_cut, self.rel_cut)

    @property
    def grid(self) -> SupportGrid:
        return self.discretization[0]

    @property
    def values(self) -> np.ndarray:
        return self.discretization[1]


def _factors(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = np.sqrt(np.abs(values))
    return s, np.sign(values) * s


def green_kernel(grid: SupportGrid, energy: complex) -> LatticeKernel:
    """Weighted Helmholtz kernel ``h^3 G0`` with exact self-cell integral."""
    return LatticeKernel(grid, lambda u: helmholtz_green(u, energy), helmholtz_cell_integral(energy, grid.h))


def build_k_operator(lam: complex, grid: SupportGrid, values: np.ndarray, mode: str = "auto") -> SandwichOperator:
    """``K(lam) = |V|^{1/2} G0(lam) sgn(V) |V|^{1/2}`` on the support grid."""
    s, ws = _factors(values)
    return SandwichOperator(green_kernel(grid, lam), s, ws, mode=mode)


@dataclass
class LSSolution:
    energy: complex
    k_vectors: np.ndarray  # (M, 3)
    grid: SupportGrid
    values: np.ndarray
    psi: np.ndarray  # (N, M)
    operator: SandwichOperator = field(repr=False)

    @property
    def v_phi(self) -> np.ndarray:
        """``V phi`` on the grid, shape ``(N, M)``."""
        return _factors(self.values)[1][:, None] * self.psi

    def phi(self, points: np.ndarray) -> np.ndarray:
        """``phi(r) = e^{ik.r} - int G0(r - s) V(s) phi(s) ds`` at points ``(P, 3)``; points on a node see the cell average."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        nodes = self.grid.nodes
        plane = np.exp(1j * points @ self.k_vectors.T)
        out = plane.astype(complex)
        vphi = self.v_phi * self.grid.weight
        cell = helmholtz_cell_integral(self.energy, self.grid.h) / self.grid.weight
        for start in range(0, points.shape[0], 256):
            sl = slice(start, start + 256)
            u = points[sl, None, :] - nodes[None]
            hit = np.all(np.abs(u) < 1e-12 * self.grid.h, axis=-1)
            u[hit] = 1.0
            g = helmholtz_green(u, self.energy)
            g[hit] = cell
            out[sl] -= g @ vphi
        return out

    def phi_on_grid(self) -> np.ndarray:
        plane = np.exp(1j * self.grid.nodes @ self.k_vectors.T)
        ker = self.operator.kernel
        conv = np.stack([ker.apply(c) for c in self.v_phi.T], -1)
        return plane - conv


def solve_modified_ls(lam: float, k_dirs: np.ndarray, grid: SupportGrid, values: np.ndarray,
                      operator: SandwichOperator | None = None, mode: str = "auto",
                      check: bool = True) -> LSSolution:
    """Solve the modified equation for incident directions ``k_dirs`` (unit vectors)."""
    k_dirs = np.atleast_2d(np.asarray(k_dirs, dtype=float))
    kvec = np.sqrt(lam) * k_dirs
    op = operator if operator is not None else build_k_operator(lam, grid, values, mode)
    s, _ = _factors(values)
    rhs = np.exp(1j * grid.nodes @ kvec.T) * s[:, None]
    if not np.any(s):
        psi = np.zeros_like(rhs)
    else:
        psi = op.solve(rhs, check=check)
    return LSSolution(energy=lam, k_vectors=kvec, grid=grid, values=values, psi=psi, operator=op)


def on_shell_t(lam: float, mesh: AngularMesh, solution: LSSolution) -> tuple[np.ndarray, np.ndarray]:
    """Kernel ``T(w_i, w'_j)`` and amplitude ``f = -T/(4 pi)`` on mesh x incident directions."""
    k = np.sqrt(lam)
    out_phase = np.exp(-1j * k * mesh.directions @ solution.grid.nodes.T)
    t = out_phase @ solution.v_phi * solution.grid.weight
    return t, -t / (4.0 * np.pi)


def s_matrix_mu2(lam: float) -> float:
    """``mu^2`` with ``mu = lam^{1/4} / (4 pi^{3/2})``."""
    return np.sqrt(lam) / (16.0 * np.pi**3)


def s_matrix(lam: float, t: np.ndarray, mesh: AngularMesh) -> SMatrixBlock:
    """``S = I - 2 pi i mu^2 D^{1/2} T D^{1/2}``, eigen-decomposed."""
    s = np.eye(mesh.size, dtype=complex) - 2j * np.pi * s_matrix_mu2(lam) * weight_split(t, mesh)
    return SMatrixBlock.from_s(t, s, mesh)


def cross_section_direct(f: np.ndarray, mesh: AngularMesh) -> float:
    """``int int |f|^2`` over both spheres."""
    w = mesh.weights
    return float(w @ (np.abs(f) ** 2) @ w)


def cross_section_ergodic(eigenvalues: np.ndarray, lam: float) -> float:
    """``(4 pi^2 / lam) sum |mu_j - 1|^2``."""
    return float(4.0 * np.pi**2 / lam * np.sum(np.abs(np.asarray(eigenvalues) - 1.0) ** 2))


@dataclass
class ErgodicExpansion:
    coefficients: np.ndarray  # a_j(w_i), shape (M, J)
    order: np.ndarray  # eigen indices by decreasing |mu_j - 1|
    residuals: np.ndarray  # weighted L2 residual after retaining 0..J terms
    eigen_residual: float  # residual of the full eigen-series


def ergodic_expansion(f: np.ndarray, block: SMatrixBlock, lam: float) -> ErgodicExpansion:
    """Coefficients ``a_j(w) = int f(w, w') G_j(w') dw'`` and truncated eigen-series residuals."""
    g = block.eigenfunctions()
    w = block.mesh.weights
    coeff = f @ (w[:, None] * g)
    order = np.argsort(-np.abs(block.eigenvalues - 1.0), kind="stable")
    c = 2.0 * np.pi / (1j * np.sqrt(lam)) * (block.eigenvalues - 1.0)
    sw = np.sqrt(w)
    res = [np.linalg.norm(sw[:, None] * f * sw[None, :])]
    partial = np.zeros_like(f)
    for j in order:
        partial = partial + c[j] * np.outer(g[:, j], np.conj(g[:, j]))
        res.append(np.linalg.norm(sw[:, None] * (f - partial) * sw[None, :]))
    return ErgodicExpansion(coefficients=coeff, order=order, residuals=np.array(res), eigen_residual=res[-1])


def born_amplitude(potential, k: np.ndarray, k_prime: np.ndarray) -> np.ndarray:
    """``-(1/4 pi) int exp(-i k.s) V(s) exp(i k'.s) ds`` from the family's transform."""
    q = np.asarray(k, dtype=float) - np.asarray(k_prime, dtype=float)
    if not hasattr(potential, "fourier"):
        raise TypeError(f"{type(potential).__name__} has no analytic transform; use born_amplitude_grid")
    return -potential.fourier(q) / (4.0 * np.pi)


def born_amplitude_grid(grid: SupportGrid, values: np.ndarray, k: np.ndarray, k_prime: np.ndarray) -> np.ndarray:
    """First Born amplitude by lattice quadrature; ``k`` ``(P,3)``, ``k_prime`` ``(Q,3)``."""
    nodes = grid.nodes
    a = np.exp(-1j * np.atleast_2d(k) @ nodes.T)
    b = np.exp(1j * nodes @ np.atleast_2d(k_prime).T)
    return -(a * values[None, :]) @ b * grid.weight / (4.0 * np.pi)


@dataclass
class ScatteringResult:
    energy: float
    mesh: AngularMesh
    t: np.ndarray
    f: np.ndarray
    block: SMatrixBlock
    solution: LSSolution = field(repr=False)

    @property
    def sigma_direct(self) -> float:
        return cross_section_direct(self.f, self.mesh)

    @property
    def sigma_ergodic(self) -> float:
        return cross_section_ergodic(self.block.eigenvalues, self.energy)


def scatter(problem: SchrodingerProblem, lam: float, mesh: AngularMesh, check: bool = True) -> ScatteringResult:
    """Full on-shell pipeline at energy ``lam`` with incident directions on ``mesh``."""
    if lam <= 0:
        raise ValueError("scattering energy must be positive")
    grid, values = problem.discretization
    sol = solve_modified_ls(lam, mesh.directions, grid, values, mode=problem.mode, check=check)
    t, f = on_shell_t(lam, mesh, sol)
    return ScatteringResult(energy=lam, mesh=mesh, t=t, f=f, block=s_matrix(lam, t, mesh), solution=sol)

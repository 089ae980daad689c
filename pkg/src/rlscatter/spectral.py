"""Exceptional values, bound states and Green functions from the sandwiched operators.

Both problems share the structure ``K(mu) = V1 G0(mu) V1 W1`` on the support
grid (for Schrodinger ``V1 = |V|^{1/2}``, ``W1 = sgn V``).  On the continuous
spectrum a singular ``I + K`` marks an exceptional value; below it (Schrodinger
``E < 0``, Dirac gap ``|mu| < m``) the operator is Hermitian up to ``W1`` and
bound states are the energies where an eigenvalue of ``K`` crosses ``-1``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq
from scipy.sparse.linalg import LinearOperator, eigsh

from .dirac import DiracProblem, build_k_dirac
from .errors import NoRootInBracket
from .kernels import dirac_green, helmholtz_green
from .lattice import SINGULAR_REL, SandwichOperator
from .schrodinger import SchrodingerProblem, build_k_operator

__all__ = [
    "SpectralScanResult",
    "BoundState",
    "exceptional_scan",
    "bound_state_search",
    "refine_bound_state",
    "richardson",
    "extrapolated_bound_states",
    "green_function",
    "green_symmetry_defect",
    "resolvent_identity_check",
    "write_scan",
]

REPORT_REL = 1e-5
LANCZOS_MIN = 1500  # unknowns above which Hermitian spectra use Lanczos
GREEN_IMAG = 0.1


# --- problem adapters ------------------------------------------------------


@dataclass
class _Discrete:
    """Uniform view of a discretized problem: nodes, factors and kernels."""

    nodes: np.ndarray
    weight: float
    block: int
    values: np.ndarray  # V, (N,) or (N, 4, 4)
    v1: np.ndarray
    v1w1: np.ndarray
    operator: callable = field(repr=False)  # mu -> SandwichOperator
    green: callable = field(repr=False)  # (u, mu) -> G0(u)
    mass: float | None = None

    @property
    def uniform_sign(self) -> int:
        """``+1``/``-1`` if ``W1`` is that multiple of the identity on the support, else 0."""
        w = self.v1w1
        if self.block == 1:
            s = np.sign(w[self.v1 != 0])
            if s.size and np.all(s == s[0]):
                return int(s[0])
            return 0
        nz = np.linalg.norm(self.v1, axis=(1, 2)) > 0
        for sgn in (1, -1):
            if np.allclose(w[nz], sgn * self.v1[nz], atol=1e-12 * max(np.max(np.abs(self.v1)), 1e-300)):
                return sgn
        return 0


def _adapt(problem, mode: str | None = None) -> _Discrete:
    if isinstance(problem, SchrodingerProblem):
        grid, values = problem.discretization
        s = np.sqrt(np.abs(values))
        mode = mode or problem.mode
        return _Discrete(
            nodes=grid.nodes, weight=grid.weight, block=1, values=values, v1=s, v1w1=np.sign(values) * s,
            operator=lambda mu: build_k_operator(mu, grid, values, mode),
            green=lambda u, mu: helmholtz_green(u, mu),
        )
    if isinstance(problem, DiracProblem):
        grid, values, fact = problem.discretization
        mode = mode or problem.mode
        return _Discrete(
            nodes=grid.nodes, weight=grid.weight, block=4, values=values, v1=fact.v1,
            v1w1=fact.v1 @ fact.w1,
            operator=lambda mu: build_k_dirac(mu, problem.m, grid, fact, mode),
            green=lambda u, mu: dirac_green(u, mu, problem.m), mass=problem.m,
        )
    raise TypeError(f"unsupported problem type {type(problem).__name__}")


def _on_continuum(problem, lam: float) -> bool:
    if isinstance(problem, DiracProblem):
        return abs(lam) > problem.m
    return lam > 0


def _below_continuum(problem, lam: float) -> bool:
    if isinstance(problem, DiracProblem):
        return abs(lam) < problem.m
    return lam < 0


# --- exceptional values ----------------------------------------------------


@dataclass
class SpectralScanResult:
    """Smallest singular values of ``I + K`` over an energy sequence.

    ``flagged`` uses ``threshold``; ``flagged_loose`` the looser
    ``report_threshold``; ``between`` lists the energies flagged by one but not
    the other.  ``near_flagged`` marks energies within ``1e-3 m`` (Dirac) of a
    flagged one, which downstream scans skip.
    """

    energies: np.ndarray
    smallest_singular: np.ndarray
    norms: np.ndarray
    threshold: float = SINGULAR_REL
    report_threshold: float = REPORT_REL
    bound_states: list = field(default_factory=list)
    mass: float | None = None

    @property
    def relative(self) -> np.ndarray:
        return self.smallest_singular / self.norms

    @property
    def flag_mask(self) -> np.ndarray:
        return self.relative < self.threshold

    @property
    def flagged(self) -> np.ndarray:
        return self.energies[self.flag_mask]

    @property
    def flagged_loose(self) -> np.ndarray:
        return self.energies[self.relative < self.report_threshold]

    @property
    def between(self) -> np.ndarray:
        rel = self.relative
        lo, hi = sorted((self.threshold, self.report_threshold))
        return self.energies[(rel >= lo) & (rel < hi)]

    @property
    def near_flagged(self) -> np.ndarray:
        if self.mass is None or not np.any(self.flag_mask):
            return np.zeros(self.energies.size, dtype=bool)
        d = np.abs(self.energies[:, None] - self.flagged[None, :])
        return np.any(d <= 1e-3 * self.mass, axis=1) & ~self.flag_mask


def exceptional_scan(energies, problem, threshold: float = SINGULAR_REL,
                     report_threshold: float = REPORT_REL, workers: int = 1) -> SpectralScanResult:
    """Smallest singular value of ``I + K(lam)`` at each energy of the continuum.

    Each energy is independent; with ``workers > 1`` they run on a thread
    pool and results are gathered in input order.
    """
    energies = np.asarray(energies, dtype=float)
    for lam in energies:
        if not _on_continuum(problem, lam):
            raise ValueError(f"energy {lam} is not on the continuous spectrum")
    disc = _adapt(problem, mode="dense")

    def one(lam):
        op = disc.operator(lam)
        if not np.any(disc.v1):
            return 1.0, 1.0
        return op.smallest_singular()

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            out = list(ex.map(one, energies))
    else:
        out = [one(lam) for lam in energies]
    smin = np.array([o[0] for o in out])
    norms = np.array([o[1] for o in out])
    return SpectralScanResult(energies=energies, smallest_singular=smin, norms=norms, threshold=threshold,
                              report_threshold=report_threshold, mass=disc.mass)


def write_scan(path, result: SpectralScanResult) -> None:
    """Columnar text file ``lambda smallest_singular flagged``."""
    mask = result.flag_mask
    with open(path, "w") as fh:
        fh.write("# smallest singular value of I + K(lambda); flagged = relative value below "
                 f"{result.threshold:.1e}\n")
        fh.write("lambda smallest_singular flagged\n")
        for lam, s, f in zip(result.energies, result.smallest_singular, mask):
            fh.write(f"{lam:.17g} {s:.17g} {int(f)}\n")


# --- bound states ----------------------------------------------------------


@dataclass
class BoundState:
    energy: float
    multiplicity: int
    smallest_singular: float | None = None


def _k_eigenvalues(disc: _Discrete, mu: float, count: int) -> np.ndarray:
    """Real eigenvalues of ``K(mu)`` below the continuum, ascending (at most ``count``).

    With ``W1 = +-I`` the operator is Hermitian and a symmetric solver is used
    (Lanczos on the FFT matvec for large grids); otherwise the nearly real
    eigenvalues of the dense matrix are kept.
    """
    op = disc.operator(mu)
    sign = disc.uniform_sign
    n = op.n
    if sign != 0 and n > LANCZOS_MIN:
        k = min(count, n - 2)
        lin = LinearOperator((n, n), matvec=lambda v: op.apply(v), dtype=complex)
        vals = eigsh(lin, k=k, which="SA", tol=1e-12, return_eigenvectors=False)
        return np.sort(vals.real)
    mat = op.matrix()
    if sign != 0:
        vals = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))
        return vals[:count]
    vals = np.linalg.eigvals(mat)
    scale = max(np.max(np.abs(vals)), 1.0)
    real = np.sort(vals[np.abs(vals.imag) < 1e-8 * scale].real)
    return real[:count]


def _count_below(vals: np.ndarray) -> int:
    return int(np.sum(vals < -1.0))


def refine_bound_state(problem, bracket: tuple, index: int = 0, count: int = 8,
                       xtol: float = 1e-8, mode: str | None = None) -> float:
    """Energy in ``bracket`` where the ``index``-th smallest eigenvalue of ``K`` equals ``-1``.

    Raises
    ------
    NoRootInBracket
        If that eigenvalue does not cross ``-1`` inside the bracket.
    """
    disc = _adapt(problem, mode)
    lo, hi = sorted(bracket)
    for e in (lo, hi):
        if not _below_continuum(problem, e):
            raise ValueError(f"energy {e} is not below the continuous spectrum")

    def surrogate(e):
        vals = _k_eigenvalues(disc, e, max(count, index + 1))
        return vals[index] + 1.0 if vals.size > index else 1.0

    flo, fhi = surrogate(lo), surrogate(hi)
    if flo * fhi > 0:
        raise NoRootInBracket(f"no eigenvalue of K crosses -1 in [{lo}, {hi}]")
    return float(brentq(surrogate, lo, hi, xtol=xtol))


def bound_state_search(problem, energy_range: tuple | None = None, n_scan: int = 24, count: int = 8,
                       xtol: float = 1e-8, mode: str | None = None) -> list:
    """Bound states in ``energy_range`` (default: the whole gap or ``(-peak, 0)``).

    The number of eigenvalues of ``K`` below ``-1`` is tracked on a scan; each
    change brackets a crossing, refined with Brent's method on the crossing
    eigenvalue.  The jump of the count is the multiplicity.
    """
    disc = _adapt(problem, mode)
    if energy_range is None:
        if isinstance(problem, DiracProblem):
            energy_range = (-problem.m * (1 - 1e-6), problem.m * (1 - 1e-6))
        else:
            vmin = float(np.min(disc.values)) if disc.values.ndim == 1 else -1.0
            energy_range = (min(vmin, -1e-3), -1e-6)
    lo, hi = sorted(energy_range)
    for e in (lo, hi):
        if not _below_continuum(problem, e):
            raise ValueError(f"energy {e} is not below the continuous spectrum")
    if not np.any(disc.v1):
        return []
    es = np.linspace(lo, hi, n_scan)
    counts = [_count_below(_k_eigenvalues(disc, e, count)) for e in es]
    out = []
    for i in range(n_scan - 1):
        c1, c2 = counts[i], counts[i + 1]
        if c1 == c2:
            continue
        idx = min(c1, c2)
        e = refine_bound_state(problem, (es[i], es[i + 1]), index=idx, count=count, xtol=xtol, mode=mode)
        out.append(BoundState(energy=e, multiplicity=abs(c2 - c1)))
    return out


def richardson(coarse: float, fine: float, ratio: float = 2.0, order: int = 2) -> float:
    """Extrapolate two results with error ``C h^order`` at spacings ``h`` and ``h / ratio``."""
    f = ratio**order
    return (f * fine - coarse) / (f - 1.0)


def extrapolated_bound_states(make_problem, h: float, energy_range: tuple | None = None,
                              n_scan: int = 24, xtol: float = 1e-8, widen: float = 0.1) -> list:
    """Bound states at spacings ``h`` and ``h/2`` combined by Richardson extrapolation.

    The lattice surrogate converges as ``O(h^2)``.  The full scan runs on the
    coarse grid only; each root is re-bracketed within ``widen`` (relative) on
    the fine grid.
    """
    coarse = bound_state_search(make_problem(h), energy_range, n_scan=n_scan, xtol=xtol)
    fine_problem = make_problem(0.5 * h)
    out = []
    dirac = isinstance(fine_problem, DiracProblem)
    for bs in coarse:
        e = bs.energy
        span = widen * max(abs(e), 1e-6)
        while True:
            lo = e - span
            hi = e + span if dirac else min(e + span, -1e-12)
            if dirac:
                lo, hi = max(lo, -fine_problem.m * (1 - 1e-9)), min(hi, fine_problem.m * (1 - 1e-9))
            idx = _index_at(fine_problem, lo, hi)
            try:
                ef = refine_bound_state(fine_problem, (lo, hi), index=idx, xtol=xtol)
                break
            except NoRootInBracket:
                if span > 10 * max(abs(e), 1.0):
                    raise
                span *= 2.0
        out.append(BoundState(energy=richardson(e, ef), multiplicity=bs.multiplicity))
    return out


def _index_at(problem, lo: float, hi: float, count: int = 8) -> int:
    disc = _adapt(problem)
    return min(_count_below(_k_eigenvalues(disc, lo, count)), _count_below(_k_eigenvalues(disc, hi, count)))


# --- Green function ----------------------------------------------------------


def _free_matrix(disc: _Discrete, points: np.ndarray, sources: np.ndarray, mu) -> np.ndarray:
    """``G0(points - sources)`` as ``(P, S)`` or ``(P, 4, S, 4)``."""
    g = disc.green(points[:, None, :] - sources[None, :, :], mu)
    if disc.block == 1:
        return g
    return g.transpose(0, 2, 1, 3)


def _flat(a: np.ndarray, block: int) -> np.ndarray:
    if block == 1:
        return a
    p, _, s, _ = a.shape
    return a.reshape(p * block, s * block)


def _times_pointwise(a_flat: np.ndarray, mats: np.ndarray, block: int, side: str) -> np.ndarray:
    """Multiply a flattened matrix by a block-diagonal pointwise factor."""
    if block == 1:
        return a_flat * mats[None, :] if side == "right" else mats[:, None] * a_flat
    d = sla.block_diag(*mats)
    return a_flat @ d if side == "right" else d @ a_flat


def green_function(r: np.ndarray, s: np.ndarray, mu: complex, problem) -> np.ndarray:
    """Perturbed Green kernel ``G(r, s, mu)`` of the full operator.

    ``G = G0 - G0 V1 W1 (I + K(mu))^{-1} V1 G0`` with the integrals taken on
    the support grid; returns ``(P, S)`` or ``(P, 4, S, 4)`` for point sets
    ``r`` ``(P, 3)`` and ``s`` ``(S, 3)``, none of which may coincide with a
    grid node or with each other.
    """
    disc = _adapt(problem)
    r = np.atleast_2d(np.asarray(r, float))
    s = np.atleast_2d(np.asarray(s, float))
    b = disc.block
    g_rs = _flat(_free_matrix(disc, r, s, mu), b)
    if not np.any(disc.v1):
        return g_rs.reshape(_free_matrix(disc, r, s, mu).shape)
    op: SandwichOperator = disc.operator(mu)
    g_rt = _flat(_free_matrix(disc, r, disc.nodes, mu), b) * disc.weight
    g_ts = _flat(_free_matrix(disc, disc.nodes, s, mu), b)
    left = _times_pointwise(g_rt, disc.v1w1, b, "right")
    rhs = _times_pointwise(g_ts, disc.v1, b, "left")
    x = op.solve(rhs, check=False)
    out = g_rs - left @ x
    if b == 1:
        return out
    return out.reshape(r.shape[0], b, s.shape[0], b)


def green_symmetry_defect(problem, mu: complex, r: np.ndarray, s: np.ndarray) -> float:
    """``max ||G(r, s, mu)^* - G(s, r, conj mu)|| / max ||G(r, s, mu)||`` over point pairs.

    ``r`` and ``s`` are disjoint point sets; ``^*`` is the conjugate (scalar)
    or conjugate transpose (4x4).
    """
    g = green_function(r, s, mu, problem)
    gb = green_function(s, r, np.conj(mu), problem)
    if g.ndim == 2:
        return float(np.max(np.abs(np.conj(g) - gb.T)) / np.max(np.abs(g)))
    ga = np.conj(g).transpose(2, 3, 0, 1)  # (S, 4, P, 4) with the 4x4 blocks transposed
    d = np.linalg.norm((ga - gb).transpose(0, 2, 1, 3), ord=2, axis=(-2, -1))
    ng = np.linalg.norm(g.transpose(0, 2, 1, 3), ord=2, axis=(-2, -1))
    return float(np.max(d) / np.max(ng))


@dataclass
class ResolventCheck:
    green_route: np.ndarray  # ((L - mu)^{-1} - (L0 - mu)^{-1}) f at the points, via G
    direct_route: np.ndarray  # same, via the unsymmetrized equation u = R0 f - R0 V u
    relative_error: float


def resolvent_identity_check(problem, mu: complex, points: np.ndarray, seed: int = 0) -> ResolventCheck:
    """Two evaluations of the resolvent difference on a random field supported on the grid.

    The first integrates the perturbed Green kernel against ``f``; the second
    solves ``(I + R0 V) u = R0 f`` on the grid and propagates ``u`` to the
    points.  The two linear systems differ, so agreement tests the factorized
    form of the resolvent difference.
    """
    disc = _adapt(problem, mode="dense")
    b = disc.block
    rng = np.random.default_rng(seed)
    n = disc.nodes.shape[0]
    f = (rng.standard_normal(n * b) + 1j * rng.standard_normal(n * b)) / np.sqrt(2.0)
    points = np.atleast_2d(np.asarray(points, float))
    op: SandwichOperator = disc.operator(mu)
    m0 = op.kernel.dense()  # weighted G0 on the grid, self cell included
    g_rt = _flat(_free_matrix(disc, points, disc.nodes, mu), b) * disc.weight
    # route 1: -G0 V1 W1 (I + K)^{-1} V1 G0 f
    free_f = m0 @ f
    x = op.solve(_mul_block(disc.v1, free_f, b), check=False)
    route1 = -g_rt @ _mul_block(disc.v1w1, x, b)
    # route 2: u = R0 f - R0 V u on the grid
    vmat = disc.values
    if b == 1:
        a = np.eye(n) + m0 * vmat[None, :]
    else:
        a = np.eye(n * b) + m0 @ sla.block_diag(*vmat)
    u = np.linalg.solve(a, free_f)
    route2 = -g_rt @ _mul_block(vmat, u, b)
    err = float(np.linalg.norm(route1 - route2) / max(np.linalg.norm(route2), 1e-300))
    return ResolventCheck(green_route=route1, direct_route=route2, relative_error=err)


def _mul_block(mats: np.ndarray, x: np.ndarray, block: int) -> np.ndarray:
    if block == 1:
        return mats * x
    return np.einsum("nij,nj->ni", mats, x.reshape(-1, block)).reshape(-1)

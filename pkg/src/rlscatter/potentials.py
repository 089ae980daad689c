"""Potential families, Dirac matrix potentials and the ``V = V1 W1 V1`` split.

Scalar families are callables on point arrays of shape ``(..., 3)``.  They
also provide ``cell_average`` which integrates the family over cubic cells;
the solvers use cell averages so that a ``1/r`` singularity or a sharp well
edge does not sit on a collocation node.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .algebra import ALPHA, I4

__all__ = [
    "Yukawa",
    "Gaussian",
    "SquareWell",
    "Tabulated",
    "Zero",
    "PotentialSpec",
    "FactorizedPotential",
    "assemble_potential",
    "factorize_potential",
    "read_tabulated",
    "write_tabulated",
]


def _radius(points: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.asarray(points, dtype=float), axis=-1)


def _gauss_cell(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    offs = np.stack(np.meshgrid(x, x, x, indexing="ij"), -1).reshape(-1, 3) * 0.5
    wts = (w[:, None, None] * w[None, :, None] * w[None, None, :]).ravel() / 8.0
    return offs, wts


class _Family:
    is_radial = True

    def radial(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.radial(_radius(points))

    def cell_average(self, centers: np.ndarray, h: float, n_sub: int = 4) -> np.ndarray:
        """Mean of the potential over cubes of side ``h`` centred at ``centers``."""
        centers = np.asarray(centers, dtype=float)
        offs, wts = _gauss_cell(n_sub)
        out = np.zeros(centers.shape[0], dtype=float)
        for o, w in zip(offs, wts):
            out += w * self(centers + h * o)
        return out

    def extent(self, eps: float) -> float:
        """Radius beyond which ``|V| < eps``."""
        raise NotImplementedError

    def peak(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class Zero(_Family):
    def radial(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def extent(self, eps):
        return 0.0

    def peak(self):
        return 0.0


@dataclass(frozen=True)
class Yukawa(_Family):
    """``g exp(-mu0 r) / r``; attractive for ``g < 0``."""

    g: float
    mu0: float

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return self.g * np.exp(-self.mu0 * r) / r

    def extent(self, eps):
        if self.g == 0:
            return 0.0
        # solve |g| e^{-mu0 r}/r = eps by fixed point on the log
        r = 1.0
        for _ in range(60):
            r = max(np.log(abs(self.g) / (eps * r)) / self.mu0, 1e-3)
        return float(r)

    def peak(self):
        return np.inf if self.g else 0.0

    def fourier(self, q: np.ndarray) -> np.ndarray:
        """``int V(s) exp(-i q.s) ds``."""
        q2 = np.sum(np.asarray(q, dtype=float) ** 2, axis=-1)
        return 4.0 * np.pi * self.g / (self.mu0**2 + q2)


@dataclass(frozen=True)
class Gaussian(_Family):
    """``g exp(-r^2 / width^2)``."""

    g: float
    width: float

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        return self.g * np.exp(-((r / self.width) ** 2))

    def extent(self, eps):
        if self.g == 0 or abs(self.g) <= eps:
            return 0.0
        return float(self.width * np.sqrt(np.log(abs(self.g) / eps)))

    def peak(self):
        return abs(self.g)

    def fourier(self, q):
        q2 = np.sum(np.asarray(q, dtype=float) ** 2, axis=-1)
        w = self.width
        return self.g * np.pi**1.5 * w**3 * np.exp(-0.25 * w * w * q2)


@dataclass(frozen=True)
class SquareWell(_Family):
    """``-depth`` inside ``|r| < radius``, zero outside."""

    depth: float
    radius: float

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r < self.radius, -self.depth, 0.0)

    def cell_average(self, centers, h, n_sub=16):
        # exact for cells wholly inside or outside, midpoint subsampling on the rim
        centers = np.asarray(centers, dtype=float)
        d = _radius(centers)
        half_diag = 0.5 * np.sqrt(3.0) * h
        out = np.where(d + half_diag <= self.radius, -self.depth, 0.0).astype(float)
        rim = np.abs(d - self.radius) < half_diag
        if np.any(rim):
            s = (np.arange(n_sub) + 0.5) / n_sub - 0.5
            offs = np.stack(np.meshgrid(s, s, s, indexing="ij"), -1).reshape(-1, 3)
            pts = centers[rim][:, None, :] + h * offs[None]
            inside = _radius(pts) < self.radius
            out[rim] = -self.depth * inside.mean(axis=1)
        return out

    def extent(self, eps):
        return self.radius if self.depth else 0.0

    def peak(self):
        return abs(self.depth)

    def fourier(self, q):
        qn = np.sqrt(np.sum(np.asarray(q, dtype=float) ** 2, axis=-1))
        a = self.radius
        with np.errstate(invalid="ignore", divide="ignore"):
            val = 4.0 * np.pi * (np.sin(qn * a) - qn * a * np.cos(qn * a)) / qn**3
        val = np.where(qn * a < 1e-4, 4.0 * np.pi * a**3 / 3.0, val)
        return -self.depth * val


@dataclass(frozen=True)
class Tabulated(_Family):
    """Values on a regular lattice, trilinear in between and zero outside.

    ``axes`` are the three coordinate vectors of the lattice and ``values``
    has shape ``(nx, ny, nz)`` (scalar) or ``(nx, ny, nz, 4, 4)`` (matrix).
    """

    axes: tuple
    values: np.ndarray = field(repr=False)
    is_radial = False

    def _interp(self, v):
        return RegularGridInterpolator(self.axes, v, bounds_error=False, fill_value=0.0)

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        flat = points.reshape(-1, 3)
        vals = np.asarray(self.values)
        if vals.ndim == 3:
            return self._interp(vals)(flat).reshape(points.shape[:-1])
        out = np.empty((flat.shape[0], 4, 4), dtype=complex)
        for i in range(4):
            for j in range(4):
                out[:, i, j] = self._interp(vals[..., i, j].real)(flat) + 1j * self._interp(
                    vals[..., i, j].imag
                )(flat)
        return out.reshape(points.shape[:-1] + (4, 4))

    @property
    def is_matrix(self) -> bool:
        return np.asarray(self.values).ndim == 5

    def extent(self, eps):
        corner = np.array([max(abs(a[0]), abs(a[-1])) for a in self.axes])
        return float(np.linalg.norm(corner))

    def peak(self):
        v = np.asarray(self.values)
        if v.ndim == 3:
            return float(np.max(np.abs(v)))
        return float(np.max(np.linalg.norm(v, ord=2, axis=(-2, -1))))


def write_tabulated(path: str | Path, points: np.ndarray, values: np.ndarray) -> None:
    """Columnar text: ``x y z`` then ``re im`` per entry, row-major over ``(i, j)``."""
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=complex).reshape(points.shape[0], -1)
    cols = [points]
    for k in range(values.shape[1]):
        cols.append(np.stack([values[:, k].real, values[:, k].imag], -1))
    np.savetxt(path, np.hstack(cols), fmt="%.17g")


def read_tabulated(path: str | Path) -> Tabulated:
    """Inverse of :func:`write_tabulated`; nodes must fill a regular lattice."""
    data = np.loadtxt(path, ndmin=2)
    pts = data[:, :3]
    raw = data[:, 3::2] + 1j * data[:, 4::2]
    ncomp = raw.shape[1]
    if ncomp not in (1, 16):
        raise ValueError(f"expected 1 or 16 complex columns, found {ncomp}")
    axes = tuple(np.unique(pts[:, k]) for k in range(3))
    shape = tuple(len(a) for a in axes)
    if np.prod(shape) != pts.shape[0]:
        raise ValueError("tabulated nodes do not form a full regular lattice")
    idx = tuple(np.searchsorted(axes[k], pts[:, k]) for k in range(3))
    if ncomp == 1:
        if np.max(np.abs(raw.imag)) > 0:
            raise ValueError("scalar tabulated potential must be real")
        vals = np.zeros(shape)
        vals[idx] = raw[:, 0].real
    else:
        mats = raw.reshape(-1, 4, 4)
        if np.max(np.abs(mats - np.conj(np.swapaxes(mats, -1, -2)))) > 1e-12:
            raise ValueError("tabulated matrix potential must be Hermitian at every node")
        vals = np.zeros(shape + (4, 4), dtype=complex)
        vals[idx] = mats
    return Tabulated(axes=axes, values=vals)


@dataclass(frozen=True)
class PotentialSpec:
    """Dirac potential ``-e nu(r) I4 + e alpha.A(r)``.

    ``scalar`` is a family for ``nu`` and ``vector`` an optional triple of
    families for ``A``.  A matrix-valued :class:`Tabulated` may be given as
    ``scalar`` with ``charge`` ignored; it is then used verbatim.
    """

    scalar: _Family = field(default_factory=Zero)
    vector: tuple | None = None
    charge: float = 1.0

    @property
    def is_radial(self) -> bool:
        return self.vector is None and self.scalar.is_radial

    def extent(self, eps: float) -> float:
        parts = [self.scalar] + list(self.vector or ())
        return max(p.extent(eps / max(abs(self.charge), 1e-300)) for p in parts)

    def _parts(self, points, h=None, n_sub=4):
        def ev(fam):
            if h is None:
                return fam(points)
            return fam.cell_average(points, h, n_sub)

        return ev

    def matrix(self, points: np.ndarray, h: float | None = None, n_sub: int = 4) -> np.ndarray:
        """``V`` at points, or cell-averaged over cubes of side ``h``."""
        points = np.asarray(points, dtype=float)
        if isinstance(self.scalar, Tabulated) and self.scalar.is_matrix:
            return self.scalar(points)
        ev = self._parts(points, h, n_sub)
        nu = ev(self.scalar)
        out = -self.charge * nu[..., None, None] * I4
        if self.vector is not None:
            a = np.stack([ev(c) for c in self.vector], -1)
            out = out + self.charge * np.einsum("...k,kij->...ij", a, ALPHA)
        return out


def assemble_potential(spec, r: np.ndarray) -> np.ndarray:
    """Pointwise potential: 4x4 matrix for a :class:`PotentialSpec`, scalar for a family."""
    if isinstance(spec, PotentialSpec):
        return spec.matrix(r)
    return spec(np.asarray(r, dtype=float))


@dataclass(frozen=True)
class FactorizedPotential:
    v1: np.ndarray
    w1: np.ndarray
    eigenvalues: np.ndarray
    u: np.ndarray


def _fix_phase(u: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    # first component with modulus above tol made real positive
    mags = np.abs(u)
    first = np.argmax(mags > tol, axis=-2)
    pivot = np.take_along_axis(u, first[..., None, :], axis=-2)[..., 0, :]
    phase = np.where(np.abs(pivot) > 0, pivot / np.where(np.abs(pivot) > 0, np.abs(pivot), 1), 1)
    return u / phase[..., None, :]


def factorize_potential(v: np.ndarray, zero_tol: float = 0.0) -> FactorizedPotential:
    """``V = V1 W1 V1`` with ``V1 = |V|^{1/2}`` and ``W1 = sgn V``.

    Works on a single Hermitian matrix or a stack ``(..., n, n)``.  Eigenvalues
    with ``|d| <= zero_tol`` get ``sgn = 0``.  Eigenvectors are ordered by
    descending eigenvalue with their first significant component made real
    positive.
    """
    v = np.asarray(v, dtype=complex)
    d, u = np.linalg.eigh(v)
    d = d[..., ::-1]
    u = _fix_phase(u[..., ::-1])
    sgn = np.where(np.abs(d) <= zero_tol, 0.0, np.sign(d))
    uh = np.conj(np.swapaxes(u, -1, -2))
    v1 = (u * np.sqrt(np.abs(d))[..., None, :]) @ uh
    w1 = (u * sgn[..., None, :]) @ uh
    return FactorizedPotential(v1=v1, w1=w1, eigenvalues=d, u=u)

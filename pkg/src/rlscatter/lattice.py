"""Nystrom discretization of translation-invariant kernels on a support lattice.

The weighted kernel ``h^3 G(r_i - r_j)`` is tabulated once on all lattice
offsets; the self-cell entry is replaced by the cell integral supplied by the
caller.  From the table the operator is either assembled densely or applied
matrix-free through a zero-padded FFT convolution.
"""

from __future__ import annotations

import os

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import ExceptionalValue, SolverDivergence
from .grid import SupportGrid

DENSE_LIMIT = 8000  # unknowns
GMRES_TOL = 1e-10
GMRES_MAXITER = 500
SINGULAR_REL = 1e-6


def configure_solver(tol: float | None = None, maxiter: int | None = None) -> None:
    """Set the GMRES stopping rule used by every subsequent iterative solve."""
    global GMRES_TOL, GMRES_MAXITER
    if tol is not None:
        GMRES_TOL = float(tol)
    if maxiter is not None:
        GMRES_MAXITER = int(maxiter)


def _workers() -> int:
    return int(os.environ.get("RLSCATTER_THREADS", "1"))


class LatticeKernel:
    """Weighted translation-invariant kernel on the offsets of a support grid.

    Parameters
    ----------
    grid : SupportGrid
    kernel : callable
        ``kernel(u)`` for separations ``u`` of shape ``(..., 3)``; returns
        ``(...)`` or ``(..., b, b)``.
    self_cell : complex or ndarray
        Integral of the kernel over the centred cell (replaces ``h^3 G(0)``).
    """

    def __init__(self, grid: SupportGrid, kernel, self_cell):
        self.grid = grid
        shape = np.asarray(grid.shape)
        span = 2 * shape - 1
        self._span = span
        axes = [np.arange(-(s - 1), s) for s in shape]
        off = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)
        centre = np.all(off == 0, axis=1)
        u = off * grid.h
        u[centre] = 1.0  # placeholder, overwritten below
        table = np.asarray(kernel(u)) * grid.weight
        table[centre] = self_cell
        self.block = 1 if table.ndim == 1 else table.shape[-1]
        self.table = table.reshape(tuple(span) + table.shape[1:])
        self._fft = None

    def _linear_index(self) -> tuple[np.ndarray, int]:
        s = self._span
        idx = self.grid.index
        a = (idx[:, 0] * s[1] + idx[:, 1]) * s[2] + idx[:, 2]
        shape = np.asarray(self.grid.shape)
        centre = ((shape[0] - 1) * s[1] + (shape[1] - 1)) * s[2] + (shape[2] - 1)
        return a, centre

    def dense(self) -> np.ndarray:
        """``(N, N)`` or ``(N b, N b)`` matrix of the weighted kernel."""
        a, centre = self._linear_index()
        n = a.size
        b = self.block
        flat = self.table.reshape((-1,) + self.table.shape[3:])
        out = np.empty((n * b, n * b), dtype=complex)
        chunk = max(1, 2_000_000 // max(n * b * b, 1))
        for start in range(0, n, chunk):
            stop = min(n, start + chunk)
            lin = a[start:stop, None] - a[None, :] + centre
            vals = flat[lin]
            if b == 1:
                out[start:stop] = vals
            else:
                out[start * b:stop * b] = vals.transpose(0, 2, 1, 3).reshape((stop - start) * b, n * b)
        return out

    def _prepare_fft(self):
        shape = np.asarray(self.grid.shape)
        pad = tuple(int(x) for x in 2 * shape)
        circ = np.zeros(pad + self.table.shape[3:], dtype=complex)
        s = shape - 1
        # offsets -s..s placed at their values modulo pad
        ix = [np.r_[0:s[k] + 1, pad[k] - s[k]:pad[k]] for k in range(3)]
        tx = [np.r_[s[k]:2 * s[k] + 1, 0:s[k]] for k in range(3)]
        circ[np.ix_(*ix)] = self.table[np.ix_(*tx)]
        self._pad = pad
        self._fft = sfft.fftn(circ, axes=(0, 1, 2), workers=_workers())

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Matrix-free product with a field of shape ``(N,)`` or ``(N, b)``."""
        if self._fft is None:
            self._prepare_fft()
        b = self.block
        x = np.asarray(x, dtype=complex).reshape(self.grid.size, b)
        lat = np.zeros(self._pad + (b,), dtype=complex)
        idx = self.grid.index
        lat[idx[:, 0], idx[:, 1], idx[:, 2]] = x
        xh = sfft.fftn(lat, axes=(0, 1, 2), workers=_workers())
        if b == 1:
            yh = self._fft[..., None] * xh
        else:
            yh = np.einsum("...ij,...j->...i", self._fft, xh)
        y = sfft.ifftn(yh, axes=(0, 1, 2), workers=_workers())
        y = y[idx[:, 0], idx[:, 1], idx[:, 2]]
        return y.reshape(-1) if b == 1 else y


def _left_mul(mats: np.ndarray, x: np.ndarray, block: int) -> np.ndarray:
    if block == 1:
        return mats * x
    return np.einsum("nij,nj->ni", mats, x.reshape(-1, block)).reshape(-1)


class SandwichOperator:
    """``K = L G R`` with pointwise ``L``, ``R`` and a lattice kernel ``G``.

    ``L`` and ``R`` are arrays ``(N,)`` (scalar) or ``(N, b, b)``.
    """

    def __init__(self, kernel: LatticeKernel, left: np.ndarray, right: np.ndarray, mode: str = "auto"):
        self.kernel = kernel
        self.left = np.asarray(left)
        self.right = np.asarray(right)
        self.block = kernel.block
        self.n = kernel.grid.size * self.block
        if mode == "auto":
            mode = "dense" if self.n <= DENSE_LIMIT else "iterative"
        if mode not in ("dense", "iterative"):
            raise ValueError(f"unknown solver mode {mode!r}")
        self.mode = mode
        self._matrix = None
        self._lu = None

    def matrix(self) -> np.ndarray:
        """Dense ``K``."""
        if self._matrix is None:
            g = self.kernel.dense()
            b = self.block
            if b == 1:
                k = self.left[:, None] * g * self.right[None, :]
            else:
                n = self.kernel.grid.size
                lb = sla.block_diag(*self.left) if n * b <= 64 else None
                if lb is not None:
                    k = lb @ g @ sla.block_diag(*self.right)
                else:
                    g4 = g.reshape(n, b, n, b)
                    k = np.einsum("iab,ibjc->iajc", self.left, g4)
                    k = np.einsum("iajc,jcd->iajd", k, self.right).reshape(n * b, n * b)
            self._matrix = k
        return self._matrix

    def apply(self, x: np.ndarray) -> np.ndarray:
        if self._matrix is not None:
            return self._matrix @ x
        y = _left_mul(self.right, x, self.block)
        y = self.kernel.apply(y).reshape(-1)
        return _left_mul(self.left, y, self.block)

    def system(self) -> np.ndarray:
        """Dense ``I + K``."""
        return np.eye(self.n, dtype=complex) + self.matrix()

    def factor(self):
        if self._lu is None:
            self._lu = sla.lu_factor(self.system(), check_finite=False)
        return self._lu

    def smallest_singular(self) -> tuple[float, float]:
        """Smallest singular value of ``I + K`` and its 2-norm (dense path)."""
        a = self.system()
        if self.n <= 2500:
            s = sla.svdvals(a, check_finite=False)
            return float(s[-1]), float(s[0])
        lu = self.factor()
        rng = np.random.default_rng(0)
        v = rng.standard_normal(self.n) + 1j * rng.standard_normal(self.n)
        inv_norm = 0.0
        for _ in range(30):
            v /= np.linalg.norm(v)
            w = sla.lu_solve(lu, v)
            w = sla.lu_solve(lu, w, trans=2)
            new = np.sqrt(np.linalg.norm(w))
            if abs(new - inv_norm) <= 1e-6 * new:
                inv_norm = new
                break
            inv_norm, v = new, w
        u = rng.standard_normal(self.n) + 1j * rng.standard_normal(self.n)
        norm = 0.0
        for _ in range(30):
            u /= np.linalg.norm(u)
            w = a.conj().T @ (a @ u)
            norm, u = np.sqrt(np.linalg.norm(w)), w
        return 1.0 / inv_norm, float(norm)

    def check_regular(self, rel: float = SINGULAR_REL) -> float:
        """Raise :class:`ExceptionalValue` when ``I + K`` is numerically singular."""
        smin, smax = self.smallest_singular()
        if smin < rel * smax:
            raise ExceptionalValue(
                f"I + K is numerically singular (s_min={smin:.3e}, ||I+K||={smax:.3e})", smin
            )
        return smin

    def solve(self, rhs: np.ndarray, check: bool = True) -> np.ndarray:
        """Solve ``(I + K) x = rhs`` for one or several right-hand sides (columns)."""
        rhs = np.asarray(rhs, dtype=complex)
        if self.mode == "dense":
            if check:
                self.check_regular()
            return sla.lu_solve(self.factor(), rhs, check_finite=False)
        op = LinearOperator((self.n, self.n), matvec=lambda v: v + self.apply(v), dtype=complex)
        cols = rhs.reshape(self.n, -1)
        out = np.empty_like(cols)
        for k in range(cols.shape[1]):
            sol, info = gmres(op, cols[:, k], rtol=GMRES_TOL, atol=0.0, restart=100,
                              maxiter=GMRES_MAXITER // 100 + 1)
            res = np.linalg.norm(op.matvec(sol) - cols[:, k]) / max(np.linalg.norm(cols[:, k]), 1e-300)
            if info != 0 and res > 10 * GMRES_TOL:
                raise SolverDivergence(f"GMRES stopped at relative residual {res:.2e}")
            out[:, k] = sol
        return out.reshape(rhs.shape)

"""Support lattices for the potential and quadrature meshes on the unit sphere."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import lebedev_rule

# polynomial order -> node count of the scipy Lebedev rules with positive weights
# (orders 13, 25 and 27 carry negative weights and are excluded)
LEBEDEV_ORDERS = {3: 6, 5: 14, 7: 26, 9: 38, 11: 50, 15: 86, 17: 110, 19: 146,
                  21: 170, 23: 194, 29: 302, 31: 350, 35: 434}


@dataclass(frozen=True)
class SupportGrid:
    """Cell-centred cubic lattice restricted to the effective support of ``V``.

    Node ``k`` sits at ``h * (index[k] - shape/2 + 1/2)``, so no node falls on
    the origin.  ``shape`` is the bounding lattice used for FFT embedding.
    """

    h: float
    shape: tuple
    index: np.ndarray  # (N, 3) integer lattice indices

    @property
    def nodes(self) -> np.ndarray:
        return self.h * (self.index - 0.5 * np.asarray(self.shape) + 0.5)

    @property
    def size(self) -> int:
        return self.index.shape[0]

    @property
    def weight(self) -> float:
        return self.h**3

    @classmethod
    def box(cls, h: float, half_width: float) -> "SupportGrid":
        """All cells of the cube ``[-n h/2, n h/2]^3`` with ``n h >= 2*half_width``."""
        if h <= 0:
            raise ValueError("grid spacing must be positive")
        n = max(1, int(np.ceil(2.0 * half_width / h - 1e-9)))
        idx = np.stack(np.meshgrid(*(np.arange(n),) * 3, indexing="ij"), -1).reshape(-1, 3)
        return cls(h=float(h), shape=(n, n, n), index=idx)

    def restrict(self, mask: np.ndarray) -> "SupportGrid":
        mask = np.asarray(mask, dtype=bool)
        if not np.any(mask):
            raise ValueError("support grid is empty after masking")
        return SupportGrid(h=self.h, shape=self.shape, index=self.index[mask])


def support_grid(values_fn, h: float, half_width: float, eps_cut: float | None = None,
                 rel_cut: float = 1e-8):
    """Build a :class:`SupportGrid` and the cell values of the potential on it.

    ``values_fn(centers, h)`` returns cell-averaged potentials, scalar ``(N,)``
    or matrix ``(N, 4, 4)``.  Cells with norm at most ``eps_cut`` (default
    ``rel_cut`` times the largest norm) are dropped.
    """
    full = SupportGrid.box(h, half_width)
    vals = values_fn(full.nodes, h)
    vals = np.asarray(vals)
    norms = np.abs(vals) if vals.ndim == 1 else np.linalg.norm(vals, ord=2, axis=(-2, -1))
    vmax = float(np.max(norms)) if norms.size else 0.0
    cut = rel_cut * vmax if eps_cut is None else eps_cut
    mask = norms > cut
    if not np.any(mask):
        # zero potential: keep the centre cell so downstream shapes stay valid
        mask = np.zeros_like(mask)
        mask[np.argmin(np.linalg.norm(full.nodes, axis=1))] = True
    grid = full.restrict(mask)
    return grid, vals[mask]


@dataclass(frozen=True)
class AngularMesh:
    """Quadrature nodes on the unit sphere with weights summing to ``4 pi``."""

    directions: np.ndarray  # (M, 3)
    weights: np.ndarray  # (M,)
    order: int

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def l_max(self) -> int:
        """Largest ``l`` whose products ``Y_lm conj(Y_lm')`` the rule integrates exactly."""
        return self.order // 2

    @classmethod
    def lebedev(cls, order: int = 17) -> "AngularMesh":
        if order not in LEBEDEV_ORDERS:
            raise ValueError(f"no Lebedev rule of order {order}; choose from {sorted(LEBEDEV_ORDERS)}")
        x, w = lebedev_rule(order)
        return cls(directions=np.ascontiguousarray(x.T), weights=np.asarray(w), order=order)

    def rotated(self, rot: np.ndarray) -> "AngularMesh":
        return AngularMesh(self.directions @ np.asarray(rot).T, self.weights, self.order)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        return np.tensordot(self.weights, values, axes=(0, 0))

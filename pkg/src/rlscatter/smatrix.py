"""On-shell S-matrix blocks on an angular mesh and their spectral data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .grid import AngularMesh


@dataclass
class SMatrixBlock:
    """Discretized ``S(lambda)`` in the symmetric weight-split form.

    ``s`` acts on ``sqrt(w) h`` so that unitarity of the operator on
    ``L2(S^2)`` (times ``C^c`` for ``c`` internal components) becomes plain
    matrix unitarity.  Eigenvectors ``vectors`` are orthonormal columns in
    that representation; :meth:`eigenfunctions` undoes the weight split.
    """

    t: np.ndarray
    s: np.ndarray
    eigenvalues: np.ndarray
    vectors: np.ndarray
    mesh: AngularMesh
    components: int = 1

    @classmethod
    def from_s(cls, t: np.ndarray, s: np.ndarray, mesh: AngularMesh, components: int = 1) -> "SMatrixBlock":
        # complex Schur form: unitary Z, and diagonal up to the non-normality of s
        tri, z = sla.schur(s, output="complex")
        return cls(t=t, s=s, eigenvalues=np.diag(tri).copy(), vectors=z, mesh=mesh, components=components)

    def eigenfunctions(self) -> np.ndarray:
        """``G_j`` sampled on the mesh, shape ``(M*c, J)``, orthonormal under the quadrature."""
        w = np.repeat(self.mesh.weights, self.components)
        return self.vectors / np.sqrt(w)[:, None]

    def unitarity_defect(self) -> float:
        """``||S* S - I||_F``."""
        n = self.s.shape[0]
        return float(np.linalg.norm(self.s.conj().T @ self.s - np.eye(n)))

    def normality_defect(self) -> float:
        a = self.s
        return float(np.linalg.norm(a @ a.conj().T - a.conj().T @ a))

    def tail_sums(self) -> np.ndarray:
        """Partial sums of ``|mu_j - 1|^2`` sorted in decreasing order."""
        d = np.sort(np.abs(self.eigenvalues - 1.0) ** 2)[::-1]
        return np.cumsum(d)


def weight_split(kernel: np.ndarray, mesh: AngularMesh, components: int = 1) -> np.ndarray:
    """``D^{1/2} K D^{1/2}`` for a kernel sampled on mesh x mesh."""
    w = np.sqrt(np.repeat(mesh.weights, components))
    return w[:, None] * kernel * w[None, :]


def cluster_eigenvalues(eigenvalues: np.ndarray, targets: np.ndarray, multiplicities) -> list:
    """Assign eigenvalues to the nearest targets in order of decreasing ``|target - 1|``.

    Each target ``k`` takes the ``multiplicities[k]`` eigenvalues closest to it
    from those still unassigned; returns one index array per target.
    """
    remaining = list(range(len(eigenvalues)))
    order = np.argsort(-np.abs(np.asarray(targets) - 1.0))
    out = [None] * len(targets)
    for k in order:
        mult = int(multiplicities[k])
        rem = np.array(remaining)
        dist = np.abs(eigenvalues[rem] - targets[k])
        pick = rem[np.argsort(dist, kind="stable")[:mult]]
        out[k] = pick
        remaining = [i for i in remaining if i not in set(pick.tolist())]
    return out

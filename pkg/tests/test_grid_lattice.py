import numpy as np
import pytest

from rlscatter.grid import LEBEDEV_ORDERS, AngularMesh, SupportGrid, support_grid
from rlscatter.kernels import helmholtz_cell_integral, helmholtz_green
from rlscatter.lattice import LatticeKernel, SandwichOperator
from rlscatter.potentials import Gaussian


@pytest.mark.parametrize("order", sorted(LEBEDEV_ORDERS))
def test_lebedev_weights_positive_and_exact(order):
    mesh = AngularMesh.lebedev(order)
    assert mesh.size == LEBEDEV_ORDERS[order]
    assert np.all(mesh.weights > 0) and np.isclose(mesh.weights.sum(), 4 * np.pi)
    z2 = mesh.integrate(mesh.directions[:, 2] ** 2)
    assert np.isclose(z2, 4 * np.pi / 3)


def test_unknown_lebedev_order():
    with pytest.raises(ValueError):
        AngularMesh.lebedev(13)


def test_support_grid_has_no_node_at_origin():
    grid, vals = support_grid(lambda c, h: Gaussian(1.0, 1.0).cell_average(c, h), 0.5, 3.0, rel_cut=1e-3)
    assert np.min(np.linalg.norm(grid.nodes, axis=1)) > 0.2
    assert vals.shape == (grid.size,)
    assert np.all(vals > 1e-3 * vals.max())


def test_zero_potential_keeps_one_cell():
    grid, vals = support_grid(lambda c, h: np.zeros(len(c)), 0.5, 1.0)
    assert grid.size == 1


def test_fft_matvec_matches_dense(rng):
    grid, _ = support_grid(lambda c, h: Gaussian(1.0, 1.0)(c), 0.4, 1.5, rel_cut=1e-2)
    ker = LatticeKernel(grid, lambda u: helmholtz_green(u, 1.0), helmholtz_cell_integral(1.0, grid.h))
    x = rng.normal(size=grid.size) + 1j * rng.normal(size=grid.size)
    assert np.allclose(ker.apply(x), ker.dense() @ x, atol=1e-12)
    assert np.allclose(ker.dense(), ker.dense().T)  # reciprocity


def test_dense_and_iterative_solves_agree(rng):
    grid, vals = support_grid(lambda c, h: Gaussian(-1.0, 1.0)(c), 0.4, 2.0, rel_cut=1e-2)
    ker = LatticeKernel(grid, lambda u: helmholtz_green(u, 1.0), helmholtz_cell_integral(1.0, grid.h))
    s = np.sqrt(np.abs(vals))
    rhs = rng.normal(size=grid.size) + 0j
    x1 = SandwichOperator(ker, s * np.sign(vals), s, mode="dense").solve(rhs)
    x2 = SandwichOperator(ker, s * np.sign(vals), s, mode="iterative").solve(rhs)
    assert np.allclose(x1, x2, atol=1e-8)


def test_bad_mode():
    grid = SupportGrid.box(1.0, 0.5)
    ker = LatticeKernel(grid, lambda u: helmholtz_green(u, 1.0), 0.1)
    with pytest.raises(ValueError):
        SandwichOperator(ker, np.ones(1), np.ones(1), mode="magic")

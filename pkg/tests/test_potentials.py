import numpy as np
import pytest

from rlscatter.algebra import ALPHA, I4
from rlscatter.potentials import (Gaussian, PotentialSpec, SquareWell, Tabulated, Yukawa, Zero,
                                  factorize_potential, read_tabulated, write_tabulated)


def test_radial_families():
    r = np.array([[0.0, 0.0, 0.5], [2.0, 0.0, 0.0]])
    assert np.allclose(Gaussian(2.0, 1.0)(r), 2.0 * np.exp(-np.array([0.25, 4.0])))
    assert np.allclose(SquareWell(3.0, 1.0)(r), [-3.0, 0.0])
    assert np.allclose(Yukawa(0.5, 1.0)(r), 0.5 * np.exp(-np.array([0.5, 2.0])) / np.array([0.5, 2.0]))
    assert np.allclose(Zero()(r), 0.0)


def test_cell_average_of_constant_and_edge():
    c = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    avg = SquareWell(1.0, 1.0).cell_average(c, 0.2)
    assert np.isclose(avg[0], -1.0) and -1.0 < avg[1] < 0.0


def test_extent_bounds_tail():
    for fam in (Gaussian(1.0, 0.7), Yukawa(1.0, 2.0)):
        r = fam.extent(1e-6)
        assert abs(fam(np.array([[r * 1.01, 0, 0]]))[0]) <= 1e-6 * fam.peak()


def test_gaussian_fourier_at_zero():
    g = Gaussian(1.5, 0.8)
    assert np.isclose(g.fourier(np.zeros((1, 3)))[0], 1.5 * (np.sqrt(np.pi) * 0.8) ** 3)


def test_dirac_matrix_assembly():
    spec = PotentialSpec(Gaussian(1.0, 1.0), vector=(Zero(), Zero(), Gaussian(0.5, 1.0)), charge=2.0)
    r = np.array([[0.1, 0.2, 0.3]])
    v = spec.matrix(r)[0]
    nu = Gaussian(1.0, 1.0)(r)[0]
    az = Gaussian(0.5, 1.0)(r)[0]
    assert np.allclose(v, -2.0 * nu * I4 + 2.0 * az * ALPHA[2])
    assert np.allclose(v, v.conj().T)
    assert not spec.is_radial and PotentialSpec(Gaussian(1.0, 1.0)).is_radial


def test_factorization_sign_structure(rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    v = a + a.conj().T
    fp = factorize_potential(v)
    assert np.allclose(fp.v1 @ fp.w1 @ fp.v1, v, atol=1e-12)
    assert np.all(np.diff(fp.eigenvalues) <= 0)
    # repeated factorization is deterministic (phase fixed)
    assert np.array_equal(factorize_potential(v).u, fp.u)


def test_factorization_of_rank_deficient():
    v = np.diag([2.0, 0.0, -3.0, 0.0]).astype(complex)
    fp = factorize_potential(v, zero_tol=1e-14)
    assert np.allclose(fp.v1 @ fp.w1 @ fp.v1, v)
    assert np.allclose(np.sort(np.diag(fp.w1).real), [-1, 0, 0, 1])


def test_tabulated_roundtrip(tmp_path):
    ax = np.linspace(-1, 1, 5)
    pts = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), -1).reshape(-1, 3)
    vals = np.exp(-np.sum(pts**2, 1))
    path = tmp_path / "v.txt"
    write_tabulated(path, pts, vals)
    tab = read_tabulated(path)
    assert isinstance(tab, Tabulated) and not tab.is_matrix
    assert np.allclose(tab(pts), vals)
    assert tab(np.array([[5.0, 0, 0]]))[0] == 0.0


def test_tabulated_rejects_non_hermitian(tmp_path):
    pts = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], float)
    mats = np.zeros((8, 4, 4), complex)
    mats[:, 0, 1] = 1.0
    path = tmp_path / "m.txt"
    write_tabulated(path, pts, mats)
    with pytest.raises(ValueError):
        read_tabulated(path)

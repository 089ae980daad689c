import numpy as np
import pytest

from rlscatter.algebra import (ALPHA, BETA, I4, DiracAlgebra, dirac_eigensystem, dirac_h0, eigenspace_projectors,
                               energy_projector, free_energy, kappa, closed_form_basis, resolvent_free,
                               schrodinger_kappa, spinor)
from rlscatter.errors import SingularShell


def test_anticommutators():
    alg = DiracAlgebra()
    mats = list(ALPHA) + [BETA]
    for i, a in enumerate(mats):
        for j, b in enumerate(mats):
            expected = 2 * I4 if i == j else 0 * I4
            assert np.allclose(alg.anticommutator(a, b), expected, atol=1e-15)


def test_h0_squares_to_energy(rng):
    q = rng.normal(size=(50, 3))
    h = dirac_h0(q, 1.3)
    e2 = free_energy(q, 1.3) ** 2
    assert np.allclose(h @ h, e2[:, None, None] * I4, atol=1e-12)


def test_eigensystem_unitary_and_ordered(rng):
    q = rng.normal(size=(40, 3))
    es = dirac_eigensystem(q, 0.7)
    z = es.z0
    assert np.allclose(np.conj(np.swapaxes(z, -1, -2)) @ z, I4, atol=1e-13)
    assert np.allclose(dirac_h0(q, 0.7) @ z, z @ es.d, atol=1e-12)
    assert np.all(es.eigenvalues[:, :2] < 0) and np.all(es.eigenvalues[:, 2:] > 0)


def test_eigensystem_regular_at_zero_momentum():
    es = dirac_eigensystem(np.zeros(3), 2.0)
    assert np.allclose(es.eigenvalues, [-2, -2, 2, 2])
    assert np.all(np.isfinite(es.z0))


def test_closed_form_vectors_span_same_eigenspaces(rng):
    q = rng.normal(size=3)
    m = 0.9
    pm, pp = eigenspace_projectors(closed_form_basis(q, m))
    assert np.allclose(pm, energy_projector(q, m, -1), atol=1e-12)
    assert np.allclose(pp, energy_projector(q, m, +1), atol=1e-12)


def test_closed_form_vectors_singular_at_origin():
    with pytest.raises(SingularShell):
        closed_form_basis(np.zeros(3), 1.0)


def test_spinor_channels():
    q = np.array([0.3, -0.2, 0.5])
    for n in (1, 2, 3, 4):
        u = spinor(q, 1.0, n)
        e = dirac_h0(q, 1.0) @ u
        sign = -1 if n <= 2 else 1
        assert np.allclose(e, sign * free_energy(q, 1.0) * u, atol=1e-13)
    with pytest.raises(ValueError):
        spinor(q, 1.0, 5)


def test_resolvent_three_term_identity(rng):
    q = rng.normal(size=(100, 3))
    mu = rng.normal(size=100) + 1j * rng.uniform(0.05, 1.0, 100)
    for qq, z in zip(q, mu):
        direct = np.linalg.inv(dirac_h0(qq, 1.0) - z * I4)
        assert np.allclose(resolvent_free(qq, 1.0, z), direct, rtol=1e-11, atol=1e-12)


def test_resolvent_on_shell_raises():
    with pytest.raises(SingularShell):
        resolvent_free(np.zeros(3), 1.0, 1.0)


@pytest.mark.parametrize("lam,expected", [(2.0, np.sqrt(3.0)), (-2.0, -np.sqrt(3.0)), (0.5, 1j * np.sqrt(0.75))])
def test_kappa_real_axis_branches(lam, expected):
    assert np.isclose(kappa(lam, 1.0), expected)


def test_kappa_decays_off_axis():
    for z in (2.0 + 0.1j, 2.0 - 0.1j, -2.0 + 0.1j, -2.0 - 0.1j):
        assert kappa(z, 1.0).imag > 0
        assert schrodinger_kappa(z).imag > 0
    # continuity with the +i0 boundary values
    assert abs(kappa(-2.0 + 1e-9j, 1.0) - kappa(-2.0, 1.0)) < 1e-6
    assert abs(schrodinger_kappa(1.0 + 1e-9j) - 1.0) < 1e-6
    assert np.isclose(schrodinger_kappa(-4.0), 2j)

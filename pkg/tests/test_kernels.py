import numpy as np
import pytest

from rlscatter.algebra import BETA, I4, dirac_h0, kappa
from rlscatter.errors import BranchError, SingularPoint
from rlscatter.kernels import (GREEN_PREFACTOR, cube_coulomb_constant, dirac_cell_integral, dirac_green,
                               helmholtz_cell_integral, helmholtz_green, kernel_b_minus, kernel_b_plus,
                               kernel_j_plus, kernel_q)
from rlscatter.oracles import convolution_b_plus, helmholtz_bump_residual, kernel_norm_integral


def _grad(fn, r, eps=1e-5):
    out = []
    for k in range(3):
        d = np.zeros(3)
        d[k] = eps
        out.append((fn(r + d) - fn(r - d)) / (2 * eps))
    return out


def test_b_plus_is_a_green_kernel_away_from_origin():
    # (alpha.p + m beta - mu) B(r) = 0 for r != 0, with p = -i grad
    mu, m = 1.5 + 0.3j, 1.0
    r = np.array([0.7, -0.4, 1.1])
    grads = _grad(lambda x: kernel_b_plus(x, mu, m), r)
    from rlscatter.algebra import ALPHA

    lhs = sum(-1j * ALPHA[k] @ grads[k] for k in range(3)) + (m * BETA - mu * I4) @ kernel_b_plus(r, mu, m)
    assert np.max(np.abs(lhs)) < 1e-7 * np.max(np.abs(kernel_b_plus(r, mu, m)))


def test_b_plus_reduces_to_q_at_zero_energy():
    r = np.array([[0.3, 0.2, -0.5], [1.0, 1.0, 1.0]])
    assert np.allclose(kernel_b_plus(r, 1e-300j, 1.3), kernel_q(r, 1.3), atol=1e-13)


def test_b_plus_matches_convolution_with_prefactor():
    r = np.array([1.2, -0.5, 0.8])
    closed = kernel_b_plus(r, 1.4 + 0.2j, 1.0)
    conv = convolution_b_plus(r, 1.4 + 0.2j, 1.0)
    assert np.linalg.norm(conv - closed) / np.linalg.norm(closed) < 1e-9


def test_b_minus_is_adjoint():
    u = np.array([0.4, 0.1, -0.9])
    bm = kernel_b_minus(u, 2.0, 1.0)
    assert np.allclose(bm, np.conj(kernel_b_plus(-u, 2.0, 1.0)).T)


def test_branch_errors():
    with pytest.raises(BranchError):
        kernel_b_plus(np.ones(3), 2.0 - 0.1j, 1.0)
    with pytest.raises(BranchError):
        kernel_b_plus(np.ones(3), 0.5, 1.0)
    with pytest.raises(SingularPoint):
        kernel_j_plus(np.zeros(3), 2.0, 1.0)


def test_dirac_green_is_b_plus_scaled_and_decays_in_gap():
    r = np.array([2.0, 0.0, 0.0])
    assert np.allclose(dirac_green(r, 2.0, 1.0), GREEN_PREFACTOR * kernel_b_plus(r, 2.0, 1.0))
    g_near, g_far = dirac_green(r, 0.5, 1.0), dirac_green(4 * r, 0.5, 1.0)
    assert np.max(np.abs(g_far)) < 0.1 * np.max(np.abs(g_near))


def test_helmholtz_green_outgoing():
    u = np.array([[3.0, 0.0, 0.0]])
    assert np.isclose(helmholtz_green(u, 4.0)[0], np.exp(6j) / (12 * np.pi))
    assert abs(helmholtz_green(u, -4.0)[0]) < np.exp(-5.9)


def test_cube_coulomb_constant_against_monte_carlo():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-0.5, 0.5, size=(400_000, 3))
    mc = np.mean(1.0 / (4 * np.pi * np.linalg.norm(pts, axis=1)))
    assert abs(cube_coulomb_constant() - mc) < 3e-3 * mc


def test_cell_integrals():
    h = 0.2
    val = helmholtz_cell_integral(1.0, h)
    assert np.isclose(val.imag, h**3 / (4 * np.pi))
    raw = helmholtz_cell_integral(1.0, h, radiative_exact=False)
    # the point limit differs from the exact radiative part at O((k h)^2)
    assert abs(raw - val) < 1e-3 * abs(val)
    assert abs(helmholtz_cell_integral(1e-12, h) - cube_coulomb_constant() * h * h) < 1e-8
    cell = dirac_cell_integral(2.0, 1.0, h)
    assert np.allclose(cell[1:, 0], 0) and np.isclose(cell[0, 0] / cell[2, 2], 3.0)


def test_helmholtz_oracle_residual_small():
    assert helmholtz_bump_residual(1.0, h=1e-2) < 1e-3


def test_kernel_norm_integral_converges():
    a = kernel_norm_integral(1.5 + 0.5j, 1.0, 20.0)
    b = kernel_norm_integral(1.5 + 0.5j, 1.0, 40.0)
    assert np.isfinite(a) and abs(b - a) < 1e-2 * b

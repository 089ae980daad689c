import numpy as np
import pytest

from rlscatter.errors import ExceptionalValue
from rlscatter.grid import AngularMesh
from rlscatter.partial_waves import partial_wave_oracle
from rlscatter.potentials import Gaussian, SquareWell, Zero
from rlscatter.schrodinger import (SchrodingerProblem, ergodic_expansion, s_matrix_mu2, scatter,
                                   solve_modified_ls)


@pytest.fixture(scope="module")
def well_result():
    return scatter(SchrodingerProblem(SquareWell(4.0, 1.0), 0.25, mode="dense"), 1.0, AngularMesh.lebedev(11))


def test_mu_squared():
    assert np.isclose(s_matrix_mu2(1.0), 1.0 / (16 * np.pi**3))


def test_unitarity_and_ergodic_identity(well_result):
    r = well_result
    assert r.block.unitarity_defect() < 1e-4
    assert abs(r.sigma_ergodic - r.sigma_direct) < 1e-8 * r.sigma_direct


def test_rotation_invariance(well_result):
    f = well_result.f
    cos = well_result.mesh.directions @ well_result.mesh.directions.T
    # f depends on the scattering angle only: compare pairs with equal angles
    pairs = np.isclose(cos, cos[0, 1])
    vals = f[pairs]
    assert np.max(np.abs(vals - vals.mean())) < 0.02 * np.max(np.abs(f))


def test_amplitude_close_to_phase_shift_oracle(well_result):
    pw = partial_wave_oracle(SquareWell(4.0, 1.0), 1.0, 8)
    mesh = well_result.mesh
    fo = pw.amplitude(mesh.directions @ mesh.directions.T)
    assert np.max(np.abs(well_result.f - fo)) < 0.05 * np.max(np.abs(fo))


def test_ergodic_expansion_converges(well_result):
    exp = ergodic_expansion(well_result.f, well_result.block, 1.0)
    assert exp.eigen_residual < 1e-8 * exp.residuals[0]
    assert exp.residuals[5] < 0.1 * exp.residuals[0]


def test_zero_potential_gives_identity():
    r = scatter(SchrodingerProblem(Zero(), 0.5), 1.0, AngularMesh.lebedev(5))
    assert np.allclose(r.block.s, np.eye(14))
    assert r.sigma_direct == 0.0


def test_solution_phi_outside_support_is_plane_wave_plus_outgoing():
    prob = SchrodingerProblem(Gaussian(-1.0, 0.7), 0.3, rel_cut=1e-4)
    grid, vals = prob.discretization
    sol = solve_modified_ls(1.0, np.array([[0.0, 0.0, 1.0]]), grid, vals)
    far = np.array([[0.0, 0.0, 60.0], [0.0, 0.0, 120.0]])
    scat = sol.phi(far)[:, 0] - np.exp(1j * far[:, 2])
    amp = scat * np.linalg.norm(far, axis=1) * np.exp(-1j * np.linalg.norm(far, axis=1))
    assert abs(amp[0] - amp[1]) < 0.02 * abs(amp[1])


def test_negative_energy_rejected():
    with pytest.raises(ValueError):
        scatter(SchrodingerProblem(SquareWell(1.0, 1.0), 0.5), -1.0, AngularMesh.lebedev(3))


def test_singular_system_raises():
    # tune the coupling so I + K is singular at the bound-state energy
    from rlscatter.spectral import bound_state_search

    prob = SchrodingerProblem(SquareWell(8.0, 1.0), 0.25, mode="dense")
    e = bound_state_search(prob, n_scan=12)[0].energy
    with pytest.raises(ExceptionalValue):
        from rlscatter.schrodinger import build_k_operator

        build_k_operator(e, prob.grid, prob.values, mode="dense").check_regular()

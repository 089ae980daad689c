import numpy as np
import pytest

from rlscatter.dirac import (AMPLITUDE_CONSTANT, DiracProblem, EnergyShell, channels_for, dirac_amplitude,
                             dirac_cross_sections, gamma_consistency, shell_delta_integral, shell_delta_limit,
                             on_shell_t_dirac, solve_rls)
from rlscatter.errors import ChannelMismatch, DegenerateFit, GapEnergy
from rlscatter.grid import AngularMesh
from rlscatter.potentials import Gaussian, PotentialSpec, Zero

LAM = np.sqrt(2.0)


@pytest.fixture(scope="module")
def onshell():
    prob = DiracProblem(PotentialSpec(Gaussian(0.5, 0.8)), 1.0, 0.35, rel_cut=1e-3)
    mesh = AngularMesh.lebedev(5)
    out = {}
    for lam in (LAM, -LAM):
        sol = solve_rls(prob, lam, mesh.directions)
        amp = dirac_amplitude(sol, mesh)
        out[lam] = (sol, amp, on_shell_t_dirac(EnergyShell(1.0, lam), amp))
    return out


def test_shell_validation():
    with pytest.raises(GapEnergy):
        EnergyShell(1.0, 0.5)
    with pytest.raises(ChannelMismatch):
        EnergyShell(1.0, 2.0, channel=1)
    with pytest.raises(ValueError):
        EnergyShell(1.0, 2.0, incident=(1.0, 1.0, 0.0))
    assert channels_for(-2.0) == (1, 2) and channels_for(2.0) == (3, 4)
    assert np.isclose(EnergyShell(1.0, -2.0).signed_kappa, -np.sqrt(3.0))


def test_s_matrix_nearly_unitary(onshell):
    for lam in (LAM, -LAM):
        assert onshell[lam][2].block.unitarity_defect() < 1e-2


def test_cross_section_identity(onshell):
    for lam in (LAM, -LAM):
        cs = dirac_cross_sections(onshell[lam][2])
        assert abs(cs.trace_direct - cs.trace_ergodic) < 1e-8 * cs.trace_direct
        assert np.allclose(cs.direct, cs.direct.conj().T, atol=1e-12 * cs.trace_direct)


def test_amplitude_proportional_to_t(onshell):
    _, amp, _ = onshell[LAM]
    fit = gamma_consistency(amp.F, amp.T, LAM)
    assert fit.correlation > 1 - 1e-12
    assert np.isclose(fit.constant, AMPLITUDE_CONSTANT, rtol=1e-10)


def test_solution_satisfies_equation_on_grid(onshell):
    sol, _, _ = onshell[LAM]
    # V1 phi on the grid reproduces psi
    phi = sol.phi(sol.grid.nodes)
    lhs = np.einsum("nij,njmc->nimc", sol.fact.v1, phi)
    assert np.max(np.abs(lhs - sol.psi)) < 1e-10 * np.max(np.abs(sol.psi))


def test_zero_potential():
    prob = DiracProblem(PotentialSpec(Zero()), 1.0, 0.5)
    mesh = AngularMesh.lebedev(3)
    sol = solve_rls(prob, 2.0, mesh.directions)
    pts = np.array([[1.0, 2.0, 3.0]])
    assert np.allclose(sol.phi(pts), sol.incident(pts))
    amp = dirac_amplitude(sol, mesh)
    with pytest.raises(DegenerateFit):
        gamma_consistency(amp.F, amp.T, 2.0)
    assert np.allclose(on_shell_t_dirac(EnergyShell(1.0, 2.0), amp).block.s, np.eye(12))


def test_shell_delta_limit():
    assert abs(shell_delta_integral(1.0, 1.0, 1e-6) - shell_delta_limit(1.0, 1.0)) < 1e-4

import numpy as np
import pytest

from rlscatter.dirac import DiracProblem
from rlscatter.errors import NoRootInBracket
from rlscatter.partial_waves import bound_states_radial
from rlscatter.potentials import Gaussian, PotentialSpec, SquareWell, Zero
from rlscatter.schrodinger import SchrodingerProblem
from rlscatter.spectral import (bound_state_search, exceptional_scan, green_symmetry_defect, refine_bound_state,
                                resolvent_identity_check, richardson, write_scan)


def test_richardson_removes_quadratic_error():
    exact, c = 3.0, 0.7
    assert np.isclose(richardson(exact + c * 0.1**2, exact + c * 0.05**2), exact)


def test_zero_potential_scan(tmp_path):
    res = exceptional_scan(np.linspace(0.5, 2.0, 4), SchrodingerProblem(Zero(), 0.5))
    assert np.allclose(res.relative, 1.0)
    assert res.flagged.size == 0
    path = tmp_path / "scan.txt"
    write_scan(path, res)
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    assert lines[0].split() == ["lambda", "smallest_singular", "flagged"]
    assert len(lines) == 5


def test_scan_depth_trend():
    mins = []
    for depth in (1.0, 4.0):
        res = exceptional_scan(np.linspace(0.2, 1.0, 3), SchrodingerProblem(SquareWell(depth, 1.0), 0.3))
        mins.append(np.min(res.relative))
    assert mins[1] < mins[0]


def test_square_well_ground_state_coarse():
    well = SquareWell(8.0, 1.0)
    exact = bound_states_radial(well, l_max=0)[0][0]
    found = bound_state_search(SchrodingerProblem(well, 0.2), n_scan=12)
    assert len(found) == 1 and found[0].multiplicity == 1
    assert abs(found[0].energy - exact) < 0.05 * abs(exact)


def test_subcritical_has_no_root():
    assert bound_state_search(SchrodingerProblem(SquareWell(2.0, 1.0), 0.2), n_scan=8) == []


def test_refine_without_root_raises():
    prob = SchrodingerProblem(SquareWell(8.0, 1.0), 0.3)
    with pytest.raises(NoRootInBracket):
        refine_bound_state(prob, (-1.0, -0.5))


@pytest.mark.slow
def test_dirac_gap_state_is_doubly_degenerate():
    prob = DiracProblem(PotentialSpec(scalar=Gaussian(2.0, 1.0)), 1.0, 0.5, rel_cut=1e-2)
    found = bound_state_search(prob, n_scan=8)
    assert found and all(-1.0 < b.energy < 1.0 for b in found)
    assert found[0].multiplicity == 2


@pytest.fixture(scope="module")
def small_problem():
    return SchrodingerProblem(Gaussian(-2.0, 1.0), 0.4, rel_cut=1e-3)


def test_green_function_symmetry(small_problem):
    rng = np.random.default_rng(5)
    pts = rng.uniform(-2, 2, (6, 3))
    assert green_symmetry_defect(small_problem, 1.0 + 0.1j, pts[:3], pts[3:]) < 1e-12


def test_resolvent_identity(small_problem):
    rng = np.random.default_rng(6)
    pts = rng.uniform(-2, 2, (5, 3))
    assert resolvent_identity_check(small_problem, 0.5 + 0.2j, pts).relative_error < 1e-10


def test_dirac_green_function_symmetry():
    prob = DiracProblem(PotentialSpec(scalar=Gaussian(2.0, 1.0)), 1.0, 0.6, rel_cut=1e-2)
    rng = np.random.default_rng(7)
    pts = rng.uniform(-2, 2, (4, 3))
    assert green_symmetry_defect(prob, 1.5 + 0.1j, pts[:2], pts[2:]) < 1e-12

import numpy as np
import pytest
from scipy.optimize import brentq

from rlscatter.errors import NonRadialPotential
from rlscatter.partial_waves import (born_phase_shifts, bound_states_radial, partial_wave_oracle)
from rlscatter.potentials import Gaussian, SquareWell, Tabulated


def _hard_s_wave(depth, radius, energy):
    # closed form for the attractive square well, l = 0
    k, q = np.sqrt(energy), np.sqrt(energy + depth)
    d = np.arctan(k / q * np.tan(q * radius)) - k * radius
    return (d + 0.5 * np.pi) % np.pi - 0.5 * np.pi


def test_square_well_s_wave_matches_closed_form():
    pw = partial_wave_oracle(SquareWell(4.0, 1.0), 1.0, 2)
    assert abs(pw.delta[0] - _hard_s_wave(4.0, 1.0, 1.0)) < 1e-8


def test_weak_coupling_agrees_with_born():
    g = Gaussian(1e-4, 1.0)
    exact = partial_wave_oracle(g, 1.0, 3).delta
    born = born_phase_shifts(g, 1.0, 3)
    assert np.allclose(exact, born, rtol=1e-3, atol=1e-14)


def test_optical_theorem():
    pw = partial_wave_oracle(Gaussian(-1.5, 1.0), 2.0, 10)
    assert np.isclose(4 * np.pi / pw.k * pw.amplitude(1.0).imag, pw.sigma_standard, rtol=1e-10)


def test_unit_modulus_s_eigenvalues():
    pw = partial_wave_oracle(SquareWell(2.0, 1.0), 0.5, 4)
    assert np.allclose(np.abs(pw.s_eigenvalues), 1.0)


def test_bound_state_matches_transcendental_equation():
    d = 10.0
    k = brentq(lambda k: k / np.tan(k) + np.sqrt(d - k * k), np.pi / 2 + 1e-9, np.pi - 1e-9)
    levels = bound_states_radial(SquareWell(d, 1.0), l_max=1)
    assert abs(levels[0][0] - (k * k - d)) < 1e-9
    assert len(levels[1]) == 1


def test_no_bound_state_below_threshold():
    levels = bound_states_radial(SquareWell(2.0, 1.0), l_max=2)
    assert all(len(v) == 0 for v in levels.values())


def test_non_radial_rejected():
    ax = np.linspace(-1, 1, 3)
    tab = Tabulated(axes=(ax, ax, ax), values=np.ones((3, 3, 3)))
    with pytest.raises(NonRadialPotential):
        partial_wave_oracle(tab, 1.0, 2)

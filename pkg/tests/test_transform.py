import numpy as np
import pytest

from rlscatter.algebra import spinor
from rlscatter.dirac import DiracProblem
from rlscatter.potentials import Gaussian, PotentialSpec, Zero
from rlscatter.transform import (_lattice, eigen_transform, free_eigen_transform, gaussian_packet,
                                 packet_norm2)


def test_parseval_and_peak():
    k0 = np.array([0.0, 1.0, 0.0])
    u = spinor(k0, 1.0, 4)
    tr = free_eigen_transform(gaussian_packet(32, 0.3, k0, 1.0, u), 0.3, 1.0)
    assert abs(tr.norm2() / packet_norm2(1.0, u) - 1) < 1e-3
    i = np.unravel_index(np.argmax(np.sum(np.abs(tr.values) ** 2, -1)), tr.values.shape[:3])
    assert np.allclose(tr.k[i], k0, atol=tr.dk)
    # a positive-energy spinor lands mostly in channels 3 and 4
    w = tr.channel_weights()
    assert w[2] + w[3] > 0.8 * w.sum()


def test_shape_check():
    with pytest.raises(ValueError):
        free_eigen_transform(np.zeros((4, 4, 4, 2)), 0.5, 1.0)


@pytest.fixture(scope="module")
def packets():
    n, h = 12, 0.5
    pts = _lattice(n, h).reshape(-1, 3)
    f = gaussian_packet(n, h, (0.5, 0.0, 0.0), 1.0, np.array([1, 0, 0, 0]))
    g = gaussian_packet(n, h, (0.0, 0.3, 0.0), 0.7, np.array([0, 1, 1j, 0]))
    return n, h, pts, f, g


def test_general_path_reduces_to_fft(packets):
    n, h, pts, f, _ = packets
    tr = free_eigen_transform(f, h, 1.0)
    prob = DiracProblem(PotentialSpec(Zero()), 1.0, h)
    val = eigen_transform(prob, pts, f.reshape(-1, 4), h**3, tr.k[1, 0, 0][None])
    assert np.allclose(val[0], tr.values[1, 0, 0], atol=1e-12)


def test_general_path_is_linear(packets):
    n, h, pts, f, g = packets
    prob = DiracProblem(PotentialSpec(Gaussian(0.5, 0.8)), 1.0, 0.5, rel_cut=1e-3)
    kp = np.array([[0.4, 0.1, 0.2]])
    a = eigen_transform(prob, pts, (2 * f - 1j * g).reshape(-1, 4), h**3, kp)
    b = 2 * eigen_transform(prob, pts, f.reshape(-1, 4), h**3, kp) - 1j * eigen_transform(
        prob, pts, g.reshape(-1, 4), h**3, kp)
    assert np.max(np.abs(a - b)) < 1e-12 * np.max(np.abs(a))
    with pytest.raises(ValueError):
        eigen_transform(prob, pts, f.reshape(-1, 4), h**3, np.zeros((1, 3)))

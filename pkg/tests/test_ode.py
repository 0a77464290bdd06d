import numpy as np
import pytest
from scipy.linalg import expm

from stokesnum import ode
from stokesnum import oper_de as od


def test_exponential_decay():
    y, n = ode.dopri45(lambda t, y: -y, np.array([1.0 + 0j]), 0.0, 2.0, rtol=1e-12,
                       max_step=0.1)
    assert abs(y[0] - np.exp(-2.0)) < 1e-11
    assert n > 0


def test_backward_integration():
    y, _ = ode.dopri45(lambda t, y: 1j * y, np.array([1.0 + 0j]), 1.0, 0.0, rtol=1e-12,
                       max_step=0.05)
    assert abs(y[0] - np.exp(-1j)) < 1e-11


def test_batched_matches_individual():
    lam = np.array([-1.0, 2.0j, 0.5])

    def f(t, y):
        return lam[:, None] * y

    y0 = np.ones((3, 1), dtype=complex)
    yb, _ = ode.dopri45(f, y0, 0.0, 1.0, rtol=1e-12, max_step=0.05, batched=True)
    assert np.allclose(yb[:, 0], np.exp(lam), rtol=1e-10, atol=0)


def test_non_finite_raises():
    with pytest.raises(ode.NonFiniteError):
        ode.dopri45(lambda t, y: np.full_like(y, np.nan), np.array([1.0 + 0j]), 0.0, 1.0)


class ConstantConnection:
    def __init__(self, A):
        self.A = np.asarray(A, dtype=complex)
        self.N = len(A)

    def Az(self, z):
        return np.broadcast_to(self.A, np.shape(z) + self.A.shape)

    Azbar = None


@pytest.mark.parametrize("angle", [0.0, 1.1, -2.5])
def test_transport_constant_connection_matches_expm(angle):
    rng = np.random.default_rng(3)
    A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    A -= np.trace(A) / 3 * np.eye(3)
    r = 1.5
    F = od.parallel_transport(ConstantConnection(A), angle, r)
    ref = expm(-A * r * np.exp(1j * angle))
    assert np.max(np.abs(F - ref)) / np.max(np.abs(ref)) < 1e-10


def test_zero_connection_gives_identity():
    F = od.parallel_transport(od.ZeroConnection(2), 0.3, 4.0)
    assert np.allclose(F, np.eye(2), atol=1e-15)


def test_bad_radius():
    with pytest.raises(ValueError):
        od.parallel_transport(od.ZeroConnection(2), 0.0, 0.0)

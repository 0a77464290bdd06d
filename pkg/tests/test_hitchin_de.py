import numpy as np
import pytest

from stokesnum import catalog as cat
from stokesnum import hitchin_de as hd
from stokesnum import pde

X1_REF = -0.0064157031233371955  # integral equation, code convention


@pytest.fixture(scope="module")
def a1a2_field():
    _, wn = hd.scaled_normalized(cat.get_theory("A1A2"), {}, 1.0)
    return wn, hd.solve_section(wn, 255)


def _curvature(conn, z0, d=1e-3):
    def axy(z):
        az, azb = conn.parts(np.atleast_1d(z))
        return (az + azb)[0], 1j * (az - azb)[0]

    ax, ay = axy(z0)
    dyax = (axy(z0 + 1j * d)[0] - axy(z0 - 1j * d)[0]) / (2 * d)
    dxay = (axy(z0 + d)[1] - axy(z0 - d)[1]) / (2 * d)
    return np.max(np.abs(dxay - dyax + ax @ ay - ay @ ax))


def test_connection_validation():
    g = pde.Grid2D(7, 1.0)
    f = pde.interpolate_field(pde.FieldGrid(np.zeros((9, 9)), g))
    w = cat.DifferentialTuple(3, {2: cat.poly([1.0]), 3: cat.poly([-1, 0, 1])})
    with pytest.raises(ValueError):
        hd.HitchinConnection(w, f)  # P_2 must vanish


def test_parts_consistent_and_traceless(a1a2_field):
    wn, u = a1a2_field
    conn = hd.HitchinConnection(wn, pde.interpolate_field(u), np.exp(0.7j))
    z = np.array([0.3 + 0.2j, -1.0 + 0.5j])
    az, azb = conn.parts(z)
    assert np.allclose(az, conn.Az(z)) and np.allclose(azb, conn.Azbar(z))
    assert np.allclose(np.trace(az, axis1=-2, axis2=-1), 0, atol=1e-14)
    assert np.allclose(np.trace(azb, axis1=-2, axis2=-1), 0, atol=1e-14)


@pytest.mark.parametrize("z0", [0.7 + 0.4j, -1.2 + 0.1j, 0.2 - 1.5j])
def test_plaquette_curvature_vanishes(a1a2_field, z0):
    wn, u = a1a2_field
    flat = _curvature(hd.HitchinConnection(wn, pde.interpolate_field(u)), z0)
    z = u.grid.mesh()
    off = pde.FieldGrid(u.values + 0.1 * np.exp(-np.abs(z - z0) ** 2), u.grid)
    bent = _curvature(hd.HitchinConnection(wn, pde.interpolate_field(off)), z0)
    assert flat < 5e-3
    assert bent > 100 * flat


def test_curvature_second_order():
    _, wn = hd.scaled_normalized(cat.get_theory("A1A2"), {}, 1.0)
    c = []
    for n in (127, 255):
        u = pde.newton_solve_u(wn.PN, 2, pde.Grid2D(n, 5.0), "fourier", 1e-10)
        c.append(_curvature(hd.HitchinConnection(wn, pde.interpolate_field(u)), 0.7 + 0.4j))
    assert 3.0 < c[0] / c[1] < 5.5


def test_a1a2_coordinates_coarse_grid(a1a2_field):
    _, u = a1a2_field
    th = cat.get_theory("A1A2")
    X = hd.hitchin_spectral_coords_DE(th, {}, 1.0, 1.0, sign_convention="code", field=u)
    assert abs(X[1] + 1) < 1e-10
    assert np.all(np.abs(X.imag) < 1e-10)
    assert abs(X[0] - X1_REF) < 1e-5


def test_phase_changes_only_the_connection(a1a2_field):
    # the field does not depend on zeta; X at |zeta| = 1 stays on the unit circle family
    _, u = a1a2_field
    th = cat.get_theory("A1A2")
    X = hd.hitchin_spectral_coords_DE(th, {}, 1.0, np.exp(0.5j), field=u)
    assert np.all(np.isfinite(X))


def test_radius_guard(a1a2_field):
    _, u = a1a2_field
    with pytest.raises(ValueError):
        hd.hitchin_frames(cat.get_theory("A1A2"), {}, 1.0, 1.0, field=u, radius=u.grid.r)


def test_error_estimate_branches():
    n = [255, 511, 1023]
    h = 1.0 / (np.array(n) + 1)
    est, p, ok = hd.de_error_estimate(1 + 3 * h ** 2, n, 0.0)
    assert abs(p - 2) < 1e-8 and ok
    assert abs(est - hd.GCI_SAFETY * 3 * h[-1] ** 2) < 1e-14
    est, p, ok = hd.de_error_estimate([1.0, 1.0 + 1e-16, 1.0], n, 1e-14)
    assert p is None and ok and est < 1e-13
    est, p, ok = hd.de_error_estimate([1.0, 2.0, 1.0], n, 0.0)
    assert p is None and not ok and est == 1.0

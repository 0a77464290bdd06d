import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stokesnum import catalog as cat
from stokesnum import metric as met
from stokesnum import pde

G_IEQ_1 = 20.39887  # integral-equation metric at c = 1, frozen


def test_semiflat_value():
    assert abs(met.semiflat_metric(1.0) - 20.4325) < 5e-4
    with pytest.raises(ZeroDivisionError):
        met.semiflat_metric(0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 20.0), st.floats(0, 2 * np.pi))
def test_semiflat_scaling(r, phi):
    c = r * np.exp(1j * phi)
    assert abs(met.semiflat_metric(c) / met.semiflat_metric(1.0) - r ** (-1 / 3)) < 1e-12


def test_bracket_orientation_on_semiflat_inputs():
    th = cat.get_theory("A1A2")
    Z = th.base_periods
    eps = 1e-7

    def ly(c):
        z = Z * c ** (5 / 6)
        return z + np.conj(z)

    for c in (0.5, 1.0, 2.0):
        g = met.metric_bracket(ly(c), ly(c + eps), ly(c + 1j * eps), eps)
        assert abs(g / met.semiflat_metric(c) - 1) < 1e-5


def test_tail_formulas():
    g = pde.Grid2D(31, 10.0)
    z = g.mesh()
    P, Pd = met.family_polys(1.0)
    u = pde.FieldGrid(0.5 * np.log(np.abs(P(z))), g)
    F = pde.FieldGrid(0.5 * Pd(z) / P(z), g)
    _, d = met.l2_metric_integral(u, F, P, Pd, "square")
    assert abs(d["I_out"] - 8 * np.sqrt(2) / 10) < 1e-12
    _, d = met.l2_metric_integral(u, F, P, Pd, "disc")
    assert abs(d["I_out"] - 4 * np.pi / 10) < 1e-12
    with pytest.raises(ValueError):
        met.l2_metric_integral(u, F, P, Pd, "annulus")


def test_semiflat_integrand_far_field():
    z = np.array([8.0 + 0j, 5j, -6 - 6j])
    P, Pd = met.family_polys(1.0)
    usf, Fsf = met.semiflat_fields(P, Pd, z)
    I = met.integrand(usf, Fsf, P, Pd, z)
    assert np.allclose(I, 2 / np.abs(P(z)), rtol=1e-14)


@pytest.fixture(scope="module")
def coarse():
    return met.direct_metric(1.0, 10.0, 255, 1e-10, "euler", return_fields=True)


def test_direct_metric_coarse(coarse):
    g, diag, u, F = coarse
    assert abs(g - G_IEQ_1) < 2e-3
    assert diag["I_in"] > 0 and diag["I_out"] > 0
    # F satisfies its Dirichlet data
    P, Pd = met.family_polys(1.0)
    z = u.grid.mesh()
    assert abs(F.values[0, 5] - 0.5 * Pd(z[0, 5]) / P(z[0, 5])) < 1e-15


def test_direct_metric_converges_second_order(coarse):
    g1 = coarse[0]
    g0, _ = met.direct_metric(1.0, 10.0, 127, 1e-10, "euler")
    r = (g0 - G_IEQ_1) / (g1 - G_IEQ_1)
    assert 3.0 < r < 5.5


def test_integrand_grids(coarse, tmp_path):
    _, _, u, F = coarse
    P, Pd = met.family_polys(1.0)
    grids = met.emit_integrand_grids(u, F, P, Pd)
    assert [f.kind for f in grids] == ["I", "I_sf", "I_diff"]
    z = u.grid.mesh()
    far = np.abs(z) > 8
    assert np.max(np.abs(grids[2].values[far])) < 1e-6
    p = tmp_path / "g.npz"
    met.save_grids(grids, p)
    back = met.load_grids(p)
    assert np.array_equal(back[0].values, grids[0].values)
    assert back[1].grid == grids[1].grid


def test_ieq_metric_small_grid():
    g = met.ieq_metric(1.0, 1e-6, {"L": 40.0, "steps": 2 ** 12, "tolerance": 1e-15})
    assert abs(g - G_IEQ_1) < 1e-4

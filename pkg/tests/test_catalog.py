import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stokesnum import catalog as cat


@pytest.mark.parametrize("name,N,d", [("A1A2", 2, 3), ("A1A3", 2, 4), ("A2A1", 3, 2), ("A2A2", 3, 3)])
def test_theory_shapes(name, N, d):
    th = cat.get_theory(name)
    w = cat.build_differentials(th)
    assert (th.N, th.d) == (N, d)
    assert (w.N, w.d) == (N, d)
    assert len(th.base_periods) == th.lattice_rank
    assert len(th.coord_formulas) == th.lattice_rank
    for f in th.coord_formulas:
        assert f.is_balanced()


def test_unknown_theory():
    with pytest.raises(cat.UnknownTheoryError):
        cat.get_theory("A3A3")


def test_unknown_parameter_rejected():
    with pytest.raises(ValueError):
        cat.build_differentials(cat.get_theory("A1A3"), {"c": 2})


def test_intersection_antisymmetric():
    for name in cat.THEORY_NAMES:
        I = cat.get_theory(name).intersection
        assert np.array_equal(I, -I.T)


def test_a1a2_family_polynomial():
    w = cat.build_differentials(cat.get_theory("A1A2"), {"Lambda": 0.5, "c": 2})
    z = 0.3 + 0.7j
    assert abs(w.P(2)(z) - (z ** 3 - 0.5 * z - 2)) < 1e-14


def test_scale_differentials():
    w = cat.build_differentials(cat.get_theory("A2A1"), {"c": 0.3})
    ws = cat.scale_differentials(w, 2.0)
    z = 0.4 - 0.1j
    assert abs(ws.P(2)(z) - 4 * w.P(2)(z)) < 1e-14
    assert abs(ws.P(3)(z) - 8 * w.P(3)(z)) < 1e-14


@settings(max_examples=30, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                min_size=2, max_size=4),
       st.complex_numbers(min_magnitude=0.2, max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_normalization_properties(low, lead):
    coef = list(low) + [lead]
    w = cat.DifferentialTuple(2, {2: cat.poly(coef)})
    wn, f = cat.normalize_quasi_monic_centered(w)
    d = w.d
    assert f.a > 0
    assert abs(abs(cat.leading(wn.PN)) - 1) < 1e-10
    assert abs(wn.PN.coef[d - 1]) < 1e-9 * max(1, np.max(np.abs(wn.PN.coef)))
    # directions at infinity are unchanged by a pullback with a > 0
    assert np.allclose(cat.stokes_ray_directions(w), cat.stokes_ray_directions(wn))


def test_pullback_identity():
    w = cat.build_differentials(cat.get_theory("A1A2"), {"Lambda": 0.8j})
    f = cat.AffineMap(0.7, 0.2 - 0.1j)
    wp = cat.pullback(w, f)
    x = 0.3 + 0.2j
    assert abs(wp.P(2)(x) - f.a ** 2 * w.P(2)(f(x))) < 1e-13


def test_stokes_directions_equally_spaced():
    for name in cat.THEORY_NAMES:
        th = cat.get_theory(name)
        w = cat.build_differentials(th)
        dirs = np.sort(cat.stokes_ray_directions(w, np.exp(0.3j)))
        n = th.d + th.N
        gaps = np.diff(np.concatenate([dirs, [dirs[0] + 2 * np.pi]]))
        assert np.allclose(gaps, 2 * np.pi / n)


def test_a1a2_directions_at_unit_hbar():
    w = cat.build_differentials(cat.get_theory("A1A2"))
    assert np.allclose(cat.stokes_ray_directions(w, 1.0), np.pi * np.array([1, 3, 5, 7, 9]) / 5)


def test_hitchin_radius_rule():
    th = cat.get_theory("A1A2")
    wn, _ = cat.normalize_quasi_monic_centered(cat.build_differentials(th))
    r = cat.choose_radius(wn, "hitchin")
    # 2 int_1^r rho^(3/2) drho = 40
    assert abs(0.8 * (r ** 2.5 - 1) - 40) < 1e-9
    assert abs(cat.choose_radius(wn, "oper") - 8.0) < 1e-12


def test_higgs_matrix_characteristic_polynomial():
    w = cat.build_differentials(cat.get_theory("A2A1"), {"c": 0.4})
    z = 0.3 + 0.5j
    phi = cat.higgs_matrix(w, z)
    # det(y - phi) = y^3 + P2 y + P3
    for y in (0.1, 1.3j, -0.7 + 0.2j):
        lhs = np.linalg.det(y * np.eye(3) - phi)
        rhs = y ** 3 + w.P(2)(z) * y + w.P(3)(z)
        assert abs(lhs - rhs) < 1e-12


def test_catalog_dict_is_json():
    import json

    d = cat.catalog_dict()
    assert set(d) == set(cat.THEORY_NAMES)
    json.dumps(d)

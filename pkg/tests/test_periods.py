import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stokesnum import catalog as cat
from stokesnum import periods as per

# printed six-figure values
TABLE = {
    "A1A2": [-2.52393 + 1.45719j, -2.91438j],
    "A1A3": [3.49608, 1.74804 * (1 + 1j), 1.74804 * (1 + 1j)],
    "A2A1": [-2.00324 + 1.15657j, -2.31315j],
    "A2A2": [2.30298, 5.47033 + 4.48792j, -4.31884 + 2.49348j, -4.98697j],
}


@pytest.mark.parametrize("name", cat.THEORY_NAMES)
def test_base_periods_match_table(name):
    Z = per.base_periods(cat.get_theory(name)).values
    assert np.allclose(Z, TABLE[name], atol=1e-5)


def test_rank2_quadrature_matches_closed_forms():
    th = cat.get_theory("A1A2")
    w = cat.build_differentials(th)
    rts = per.sorted_roots(w.PN)
    for (ia, ib, br), Z in zip(per._SEGMENTS_N2["A1A2"], th.base_periods):
        assert abs(per.numeric_period_n2(w.PN, rts[ia], rts[ib], br) - Z) < 1e-12
    th = cat.get_theory("A1A3")
    w = cat.build_differentials(th)
    rts = per.sorted_roots(w.PN)
    for (ia, ib, br), Z in zip(per._SEGMENTS_N2["A1A3"], th.base_periods):
        assert abs(per.numeric_period_n2(w.PN, rts[ia], rts[ib], br) - Z) < 1e-12


def test_rank3_loops_match_closed_form():
    th = cat.get_theory("A2A1")
    w = cat.build_differentials(th)
    for i in range(2):
        Z = per.numeric_period_n3(w, th.basis(i), th)
        assert abs(Z - th.base_periods[i]) < 1e-10


def test_branch_errors():
    p = cat.poly([-1, 0, 0, 1])
    with pytest.raises(per.BranchError):
        per.numeric_period_n2(p, 1.0, 0.5)
    with pytest.raises(per.BranchError):
        per.numeric_period_n2(cat.poly([0, 0, 1, 1]), 0.0, -1.0)  # double root at 0


def test_period_of_and_flavor():
    th = cat.get_theory("A2A2")
    pv = per.base_periods(th)
    assert abs(per.period_of([1, 1, 0, 0], pv) - (pv[0] + pv[1])) < 1e-15
    assert per.is_pure_flavor([0, 0, 1, 0], th)
    assert not per.is_pure_flavor([1, 0, 0, 0], th)
    with pytest.raises(ValueError):
        per.period_of([1, 0], pv)


def test_a1a2_conformal_scaling():
    th = cat.get_theory("A1A2")
    pv = per.periods_at(th, {"c": 2.0, "Lambda": 0})
    assert np.allclose(pv.values, th.base_periods * 2 ** (5 / 6), rtol=1e-14)


def test_continuation_agrees_with_scaling_law():
    # general continuation path against the exact c^(5/6) law
    th = cat.get_theory("A1A2")
    Z = per._continue_n2(th, {"Lambda": 0, "c": 1.7}, 32)
    assert np.allclose(Z, th.base_periods * 1.7 ** (5 / 6), rtol=1e-11)


def test_deformed_a1a2_periods():
    # [DERIVED] continuation to Lambda = 0.8i, frozen
    pv = per.periods_at(cat.get_theory("A1A2"), {"Lambda": 0.8j})
    assert np.allclose(pv.values, [-1.930 + 0.414j, -1.183 - 2.917j], atol=2e-3)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.2, 5.0))
def test_period_scaling_rank2(t):
    th = cat.get_theory("A1A3")
    w = cat.build_differentials(th)
    ws = cat.scale_differentials(w, t)
    rts = per.sorted_roots(w.PN)
    ia, ib, br = per._SEGMENTS_N2["A1A3"][1]
    Z = per.numeric_period_n2(w.PN, rts[ia], rts[ib], br)
    Zt = per.numeric_period_n2(ws.PN, rts[ia], rts[ib], br)
    assert abs(Zt - t * Z) < 1e-9 * abs(t * Z)


@settings(max_examples=8, deadline=None)
@given(st.floats(0.3, 3.0))
def test_period_scaling_rank3(t):
    import dataclasses

    th = cat.get_theory("A2A1")
    w = cat.build_differentials(th)
    ws = cat.scale_differentials(w, t)
    for c in per._LOOP_BASES["A2A1"]["contours"]:
        Z = per.loop_period(w, c)
        cs = dataclasses.replace(c, sheet_hint=c.sheet_hint * t)
        Zt = per.loop_period(ws, cs, per.sorted_roots(w.PN))
        assert abs(Zt - t * Z) < 1e-9 * abs(t * Z)

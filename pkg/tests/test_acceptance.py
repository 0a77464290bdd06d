"""Acceptance criteria 1-9; criterion 10 is recorded as not reproducible.

Each test prints one PASS/FAIL line; the lines are repeated in the terminal
summary.  The full suite takes roughly ten minutes on one core.
"""
import json
import math

import numpy as np
import pytest
from scipy.linalg import expm

from conftest import RESULTS
from stokesnum import catalog as cat
from stokesnum import cli
from stokesnum import compare as cmp
from stokesnum import hitchin_de as hd
from stokesnum import ieq
from stokesnum import metric as met
from stokesnum import oper_de as od
from stokesnum import pde
from stokesnum import periods as per

IEQ_FIXTURE = [-0.006415703123337184, -1.0]
DE_FIXTURE = [-0.006415963850395493, -0.9999999999999987]


def report(n, ok, detail):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def a1a2_ieq():
    return ieq.solve_fixed_point(cat.get_theory("A1A2"), None, "hitchin", 1.0)


@pytest.fixture(scope="module")
def a1a2_de():
    return {}


def test_criterion_1_ieq_fixture(a1a2_ieq):
    X = ieq.cluster_at_unit(a1a2_ieq, "code")
    d = np.abs(np.asarray(X) - IEQ_FIXTURE)
    report(1, bool(np.all(d < 1e-12)) and a1a2_ieq.elapsed < 60,
           f"X = {list(map(float, X))}, |dX| = {d.max():.1e}, {a1a2_ieq.elapsed:.1f} s")


def test_criterion_2_de_fixture(capsys, a1a2_de):
    assert cli.main(["hitchin-de", "--theory", "A1A2", "--R", "1", "--sign", "code"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["pde"]["nmesh"] == 1023 and out["pde"]["method"] == "fourier"
    X = out["cluster"]
    a1a2_de["X1_code"] = X[0]
    d1, d2 = abs(X[0] - DE_FIXTURE[0]), abs(X[1] + 1)
    report(2, d1 < 1e-6 and d2 < 1e-9,
           f"X = {X}, |dX1| = {d1:.1e} (tol 1e-6), |X2 + 1| = {d2:.1e} (tol 1e-9), "
           f"{out['seconds']:.0f} s")


def test_criterion_3_intro_cross_ratio(a1a2_ieq, a1a2_de):
    if "X1_code" not in a1a2_de:
        X = hd.hitchin_spectral_coords_DE(cat.get_theory("A1A2"), {}, 1.0, 1.0,
                                          {"pde_nmesh": 1023}, sign_convention="code")
        a1a2_de["X1_code"] = float(X[0].real)
    x_ieq = float(ieq.cluster_at(a1a2_ieq, 1.0, "paper")[0].real)
    x_de = -a1a2_de["X1_code"]
    d = abs(x_ieq - x_de)
    report(3, d < 5e-7, f"IEQ {x_ieq:.10f}, DE(1023) {x_de:.10f}, diff {d:.1e} (tol 5e-7)")


def test_criterion_4_oper_sweep():
    cfg = cmp.RunConfig("A1A2", "oper", theta=0.0, values=[0.01, 0.1, 0.5, 1.0, 2.0])
    recs = cmp.run_sweep(cfg)
    worst = max(max(r.reldiff) for r in recs if r.reldiff)
    ok = all(r.error is None and max(r.reldiff) < 1e-9 for r in recs)
    report(4, ok, f"max reldiff {worst:.1e} over |hbar|^-1 in {cfg.values} (tol 1e-9)")


def test_criterion_5_pure_flavor():
    th = cat.get_theory("A2A2")
    pv = per.periods_at(th, {})
    flav = [i for i in range(th.lattice_rank) if per.is_pure_flavor(th.basis(i), th)]
    assert flav == [2, 3]
    lines, ok = [], True
    for R in (0.1, 0.5, 1.0, 1.5, 2.0):
        exact = np.exp(2 * R * np.real(pv.values))
        sol = ieq.solve_fixed_point(th, pv, "hitchin", R)
        vals, ests = hd.richardson_ladder(th, {}, R, 1.0)
        for i in flav:
            xi = np.exp(ieq.evaluate_at(sol, th.basis(i), 1.0))
            di = abs(xi / exact[i] - 1)
            dd = abs(vals[-1, i] - exact[i])
            ok &= di < 1e-12 and dd <= ests[i][0]
            lines.append(f"R={R} X{i + 1}: IEQ rel {di:.0e}, DE {dd:.1e} <= est {ests[i][0]:.1e}")
    report(5, bool(ok), "; ".join(lines))


def test_criterion_6_a1a3_symmetry():
    th = cat.get_theory("A1A3")
    Xo = od.oper_coords_DE(th, {}, 1.0)
    Xh = hd.hitchin_spectral_coords_DE(th, {}, 1.0, 1.0, {"pde_nmesh": 1023})
    do = abs(Xo[1] - Xo[2]) / abs(Xo[1])
    dh = abs(Xh[1] - Xh[2]) / abs(Xh[1])
    report(6, do < 1e-8 and dh < 1e-8, f"oper |X2-X3|/|X2| = {do:.1e}, "
           f"Hitchin R=1 {dh:.1e} (tol 1e-8)")


def test_criterion_7_metric_triangle():
    lines, ok = [], True
    for c in (0.5, 1.0, 2.0):
        gde, _ = met.direct_metric(c, 10.0, 1400, 5e-11, "euler")
        gie = met.ieq_metric(c, 1e-6, {"tolerance": 1e-15})
        ok &= abs(gde - gie) < 1.2e-4
        lines.append(f"c={c}: g_DE {gde:.6f} g_IEQ {gie:.6f} diff {gde - gie:.1e}")
    gsf1 = met.semiflat_metric(1.0)
    ok &= abs(gsf1 - 20.4325) < 5e-4
    g4, _ = met.direct_metric(4.0, 10.0, 1400, 5e-11, "euler")
    ratio = g4 / met.semiflat_metric(4.0)
    ok &= 0.98 <= ratio <= 1.02
    lines += [f"g_sf(1) {gsf1:.5f}", f"g_DE(4)/g_sf(4) {ratio:.5f}"]
    report(7, bool(ok), "; ".join(lines))


def test_criterion_8_conformal_plateau():
    rep = cmp.conformal_limit_check("A1A2", {}, (1.0,), [math.exp(-9)])
    x, xs = rep["plateau"][0], rep["x_star"]
    report(8, abs(x - xs) < 5e-3, f"x_inst(e^-9) {x:.5f}, x* {xs:.5f}, diff {abs(x - xs):.1e}")


class _Const:
    def __init__(self, A):
        self.A, self.N = A, len(A)

    def Az(self, z):
        return np.broadcast_to(self.A, np.shape(z) + self.A.shape)

    Azbar = None


def test_criterion_9_property_suites():
    out = {}
    # convolution oracle
    sol = ieq.solve_fixed_point(cat.get_theory("A1A2"), None, "hitchin", 1.0,
                                ieq.RayGrid(40.0, 2 ** 10), tolerance=1e-13)
    out["conv"] = float(np.max(np.abs(ieq.apply_F(sol, "fourier") - ieq.apply_F(sol, "simps"))))
    # transport against the matrix exponential
    rng = np.random.default_rng(1)
    A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    F = od.parallel_transport(_Const(A), 0.8, 1.2)
    ref = expm(-A * 1.2 * np.exp(0.8j))
    out["expm"] = float(np.max(np.abs(F - ref)) / np.max(np.abs(ref)))
    # gauge invariance
    th = cat.get_theory("A2A1")
    fs = od.oper_frames(th, hbar=1.0)
    X0 = od.spectral_coords_DE(fs, th)
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) + 2 * np.eye(3)
    fs.vectors = (fs.vectors @ g.T) * np.exp(1j * rng.uniform(0, 6, 5))[:, None]
    out["gauge"] = float(np.max(np.abs(od.spectral_coords_DE(fs, th) / X0 - 1)))
    # manufactured solution order
    errs = []
    for n in (31, 63, 127):
        grid = pde.Grid2D(n, 1.0)
        z = grid.mesh()[1:-1, 1:-1]
        ue = np.sin(np.pi * z.real) * np.sin(np.pi * z.imag)
        kap = 1 + z.real ** 2
        x = pde.linear_step_euler(kap, -2 * np.pi ** 2 * ue - kap * ue, grid.h)
        errs.append(np.max(np.abs(x - ue)))
    out["order"] = float(np.log2(errs[1] / errs[2]))
    # period scaling
    w = cat.build_differentials(cat.get_theory("A1A3"))
    rts = per.sorted_roots(w.PN)
    worst = 0.0
    for t in (0.3, 2.0, 7.0):
        ws = cat.scale_differentials(w, t)
        for ia, ib, br in per._SEGMENTS_N2["A1A3"]:
            Z = per.numeric_period_n2(w.PN, rts[ia], rts[ib], br)
            Zt = per.numeric_period_n2(ws.PN, rts[ia], rts[ib], br)
            worst = max(worst, abs(Zt / (t * Z) - 1))
    out["scaling"] = worst
    # Richardson on a pure power law
    h = 1.0 / (np.array([255, 511, 1023]) + 1)
    est, p, acc = pde.richardson_error(0.25 + 3 * h ** 2, nmesh=[255, 511, 1023])
    out["rich"] = abs(est - 3 * h[-1] ** 2) / (3 * h[-1] ** 2) + abs(p - 2)
    ok = (out["conv"] < 1e-6 and out["expm"] < 1e-10 and out["gauge"] < 1e-10
          and 1.8 <= out["order"] <= 2.2 and out["scaling"] < 1e-9 and out["rich"] < 1e-9
          and acc)
    report(9, bool(ok), ", ".join(f"{k} {v:.1e}" if k != "order" else f"order {v:.3f}"
                                  for k, v in out.items()))


def test_criterion_10_not_reproducible():
    RESULTS[10] = ("criterion 10: SKIP  full multi-CPU-day sweeps and 8191-grid ladders are "
                   "out of desk-scale reach; replaced by criteria 1-9 and ladders {255, 511, 1023}")
    pytest.skip("not reproducible at desk scale")

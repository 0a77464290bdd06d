"""Kaehler metric g(c)|dc|^2 on the (A1,A2) Coulomb branch at Lambda = 0.

Three routes:

direct
    solve the self-duality equation for P = z^3 - c, the linear variation
    equation for F, and integrate the L2 norm of the tangent vector.
integral equation
    finite differences of log X_i(R=1, zeta=1) in c.
semiflat
    closed form 25 M^2 / (6 sqrt 3) |c|^{-1/3}.
"""
import json
from dataclasses import dataclass, field

import numpy as np

from . import catalog as cat
from . import ieq
from . import pde
from . import periods as per

METRIC_DEFAULTS = {"rmax": 10.0, "pde_nmesh": 1400, "pde_thresh": 5e-11,
                   "method": "euler", "eps": 1e-6}


@dataclass
class MetricSample:
    c: complex
    g_DE: float = None
    g_IEQ: float = None
    g_sf: float = None
    diagnostics: dict = field(default_factory=dict)


def family_polys(c):
    """P = z^3 - c and its c-derivative."""
    return cat.poly([-c, 0, 0, 1]), cat.poly([-1.0])


def semiflat_metric(c):
    if c == 0:
        raise ZeroDivisionError("semiflat metric is singular at c = 0")
    return 25 * cat._M() ** 2 / (6 * np.sqrt(3)) * abs(c) ** (-1 / 3)


def solve_F_variation(u, P, Pdot, direct_cap=1100):
    """Solve (Delta - 8(e^{2u} + e^{-2u}|P|^2)) F + 8 e^{-2u} conj(P) Pdot = 0.

    Dirichlet data F = Pdot / (2P) on the boundary of the grid.  The
    coefficient is real, so real and imaginary parts are two solves with
    the same operator.
    """
    g = u.grid
    h = g.h
    z = g.mesh()
    p, pd = P(z), Pdot(z)
    uu = u.values
    Fb = np.zeros(z.shape, dtype=complex)
    edge = np.ones(z.shape, bool)
    edge[1:-1, 1:-1] = False
    Fb[edge] = 0.5 * pd[edge] / p[edge]
    ui = uu[1:-1, 1:-1]
    kap = 8 * (np.exp(2 * ui) + np.exp(-2 * ui) * np.abs(p[1:-1, 1:-1]) ** 2)
    src = 8 * np.exp(-2 * ui) * np.conj(p[1:-1, 1:-1]) * pd[1:-1, 1:-1]
    # move boundary values to the right-hand side: lap(Fb) carries them
    rhs = -src - pde.laplacian(Fb, h)
    F = Fb.copy()
    lap = pde.laplacian_matrix(g.nmesh, h)
    for part in (np.real, np.imag):
        sol = pde.linear_step_euler(kap, part(rhs), h, direct_cap, _lap=lap)
        F[1:-1, 1:-1] += sol if part is np.real else 1j * sol
    return pde.FieldGrid(F, g, "F")


def integrand(u, F, P, Pdot, z):
    """4 e^{-2u} (|Pdot|^2 - Re(F P conj(Pdot)))."""
    p, pd = P(z), Pdot(z)
    return 4 * np.exp(-2 * u) * (np.abs(pd) ** 2 - np.real(F * p * np.conj(pd)))


def semiflat_fields(P, Pdot, z):
    """u^sf = log|P| / 2 and F^sf = Pdot / (2P)."""
    p = P(z)
    return 0.5 * np.log(np.abs(p)), 0.5 * Pdot(z) / p


def _cell_average(a):
    return 0.25 * (a[1:, 1:] + a[:-1, 1:] + a[1:, :-1] + a[:-1, :-1])


def l2_metric_integral(u, F, P, Pdot, domain="square", n=3):
    """g_DE = I_in + I_out.

    domain='square' integrates over the whole grid square with cell-center
    values (bilinear averages of the nodes) and adds the semiflat tail
    2|Pdot|^2 / |z|^n outside the square.  domain='disc' keeps only cells
    whose centers lie in |z| < r and adds 4 pi / ((n-2) r^(n-2)).

    Returns
    -------
    g, diagnostics dict with I_in and I_out
    """
    g = u.grid
    I = integrand(u.values, F.values, P, Pdot, g.mesh())
    cells = _cell_average(I)
    h, r = g.h, g.r
    pd2 = float(np.abs(Pdot(0.0)) ** 2)
    if domain == "square":
        I_in = float(cells.sum() * h * h)
        # integral of |z|^-n outside [-r, r]^2 is 8 r^(2-n) int_0^{pi/4} cos^(n-2)
        from scipy.integrate import quad

        ang = quad(lambda t: np.cos(t) ** (n - 2), 0, np.pi / 4)[0]
        I_out = 2 * pd2 * 8 * ang / ((n - 2) * r ** (n - 2))
    elif domain == "disc":
        xc = g.x[:-1] + h / 2
        inside = (xc[:, None] ** 2 + xc[None, :] ** 2) < r * r
        I_in = float(cells[inside].sum() * h * h)
        I_out = 2 * pd2 * 2 * np.pi / ((n - 2) * r ** (n - 2))
    else:
        raise ValueError(domain)
    return I_in + I_out, {"I_in": I_in, "I_out": I_out}


def direct_metric(c, rmax=10.0, pde_nmesh=1400, pde_thresh=5e-11, method="euler",
                  domain="square", return_fields=False, **kw):
    """g_DE(c) from the self-duality solution and the variation F."""
    P, Pdot = family_polys(c)
    grid = pde.Grid2D(pde_nmesh, rmax)
    u = pde.newton_solve_u(P, 2, grid, method=method, pde_thresh=pde_thresh, **kw)
    F = solve_F_variation(u, P, Pdot)
    gval, diag = l2_metric_integral(u, F, P, Pdot, domain)
    diag.update(newton=u.info.get("iterations"), residual=u.info.get("residual"))
    if return_fields:
        return gval, diag, u, F
    return gval, diag


def log_y(c, theory=None, ieq_params=None):
    """log X_i(R=1, zeta=1) at Lambda = 0, periods scaled by c^(5/6)."""
    th = theory or cat.get_theory("A1A2")
    p = dict(ieq.IEQ_DEFAULTS)
    p.update(ieq_params or {})
    pv = per.periods_at(th, {"c": c, "Lambda": 0})
    grid = ieq.RayGrid(p["L"], p["steps"])
    sol = ieq.solve_fixed_point(th, pv, "hitchin", 1.0, grid, p["damping"], p["tolerance"],
                                p["max_iter"], p["method"])
    X = ieq.cluster_at(sol, 1.0, "paper")
    return np.log(X)


def metric_bracket(ly, ly_a, ly_b, eps):
    """g from forward differences of log y in the real (a) and imaginary (b) directions.

    The orientation is fixed so that semiflat inputs give the positive
    semiflat metric.
    """
    da = (np.real(ly_a) - np.real(ly)) / eps
    db = (np.real(ly_b) - np.real(ly)) / eps
    return float(da[1] * db[0] - da[0] * db[1])


def ieq_metric(c, eps=1e-6, ieq_params=None, theory=None):
    """g_IEQ(c) from three integral-equation solves."""
    vals = [log_y(c + d, theory, ieq_params) for d in (0, eps, 1j * eps)]
    return metric_bracket(*vals, eps)


def emit_integrand_grids(u, F, P, Pdot):
    """Integrand I, its semiflat counterpart and their difference on the grid."""
    g = u.grid
    z = g.mesh()
    I = integrand(u.values, F.values, P, Pdot, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        usf, Fsf = semiflat_fields(P, Pdot, z)
        Isf = integrand(usf, Fsf, P, Pdot, z)
    return (pde.FieldGrid(I, g, "I"), pde.FieldGrid(Isf, g, "I_sf"),
            pde.FieldGrid(I - Isf, g, "I_diff"))


def save_grids(fields, path):
    meta = {"nmesh": fields[0].grid.nmesh, "r": fields[0].grid.r,
            "kinds": [f.kind for f in fields]}
    np.savez(path, meta=json.dumps(meta), **{f.kind: f.values for f in fields})


def load_grids(path):
    with np.load(path) as d:
        meta = json.loads(str(d["meta"]))
        g = pde.Grid2D(meta["nmesh"], meta["r"])
        return [pde.FieldGrid(d[k], g, k) for k in meta["kinds"]]

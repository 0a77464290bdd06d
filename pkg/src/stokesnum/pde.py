"""Self-duality equation for the Hitchin section on a square grid.

Solves

    Delta u = 4 (exp(k u) - exp(-2 u) |P|^2),   k = 2 / (N - 1),

for u = u0 + v with a closed-form model u0 and Dirichlet data v = 0 on the
boundary of the square |Re z|, |Im z| <= r.  Newton's method is used with
two backends for the linear step (Delta - kappa) dv = -G:

euler
    five-point sparse matrix, solved directly (SuperLU) or, above a size
    cap, by smoothed-aggregation AMG preconditioned CG to rounding level.
fourier
    the constant-coefficient Helmholtz operator (Delta - C) is inverted in
    the discrete sine basis.  By default it preconditions a CG solve of the
    true linearization; ``inner='stationary'`` instead takes one Helmholtz
    step per outer iteration.
"""
import json
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.fft import dstn, idstn
from scipy.interpolate import RectBivariateSpline

log = logging.getLogger(__name__)

PDE_DEFAULTS = {"pde_nmesh": 1023, "pde_thresh": 1e-9, "method": "fourier"}


class DivergenceError(RuntimeError):
    pass


class MemoryLimitError(MemoryError):
    pass


@dataclass(frozen=True)
class Grid2D:
    """Square grid on [-r, r]^2 with nmesh interior nodes per axis.

    Nodes are x_i = -r + i h, i = 0..nmesh+1, h = 2r / (nmesh + 1); the
    first and last nodes carry the Dirichlet data.
    """

    nmesh: int
    r: float

    def __post_init__(self):
        if self.nmesh < 3:
            raise ValueError("nmesh must be at least 3")

    @property
    def h(self):
        return 2 * self.r / (self.nmesh + 1)

    @property
    def x(self):
        return -self.r + self.h * np.arange(self.nmesh + 2)

    def mesh(self):
        """Complex coordinates z on the full grid, indexed [ix, iy]."""
        x = self.x
        return x[:, None] + 1j * x[None, :]

    def is_dst_friendly(self):
        return ((self.nmesh + 1) & self.nmesh) == 0


@dataclass
class FieldGrid:
    values: np.ndarray
    grid: Grid2D
    kind: str = "u"
    info: dict = field(default_factory=dict)


def bump(z, r):
    """Smooth mollifier exp(1 - 1/(1 - (|z|/(0.9 r))^2)) on |z| < 0.9 r, else 0."""
    s2 = (np.abs(z) / (0.9 * r)) ** 2
    out = np.zeros(np.shape(z))
    inside = s2 < 1
    out[inside] = np.exp(1 - 1 / (1 - s2[inside]))
    return out


def model_u0(PN, grid, N):
    """u0 = ((N-1)/(2N)) log(|P|^2 + sigma exp(-|P|^4)) on the full grid."""
    z = grid.mesh()
    a2 = np.abs(PN(z)) ** 2
    with np.errstate(under="ignore"):
        reg = bump(z, grid.r) * np.exp(-a2 ** 2)
    u0 = (N - 1) / (2 * N) * np.log(a2 + reg)
    return FieldGrid(u0, grid, "u0")


def laplacian(u, h):
    """Five-point Laplacian at interior nodes of a full-grid array."""
    return (u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2]
            - 4 * u[1:-1, 1:-1]) / h ** 2


def _k(N):
    return 2.0 / (N - 1)


def nonlinearity(u, a2, N):
    """4 (e^{k u} - e^{-2u} |P|^2)."""
    return 4 * (np.exp(_k(N) * u) - np.exp(-2 * u) * a2)


def kappa(u, a2, N):
    """Derivative of the nonlinearity in u."""
    k = _k(N)
    return 4 * (k * np.exp(k * u) + 2 * np.exp(-2 * u) * a2)


def residual(u, a2, N, h):
    """Interior residual Delta_h u - 4 (e^{ku} - e^{-2u}|P|^2)."""
    ui = u[1:-1, 1:-1]
    return laplacian(u, h) - nonlinearity(ui, a2[1:-1, 1:-1], N)


def residual_norm(G, h, norm):
    if norm == "C0":
        return float(np.max(np.abs(G)))
    return float(np.sqrt(np.sum(G ** 2)) * h)


# ------------------------------------------------------------- linear steps

def laplacian_matrix(n, h):
    """Sparse five-point Laplacian on n x n interior nodes, zero Dirichlet data."""
    D = sp.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1]) / h ** 2
    I = sp.identity(n)
    return (sp.kron(D, I) + sp.kron(I, D)).tocsr()


def linear_step_euler(kap, rhs, h, direct_cap=1100, tol=1e-13, _lap=None):
    """Solve (Delta_h - kappa) x = rhs with zero Dirichlet data.

    Direct sparse LU up to ``direct_cap`` nodes per axis, AMG-preconditioned
    CG beyond (to a relative residual ``tol``).
    """
    n = kap.shape[0]
    L = _lap if _lap is not None else laplacian_matrix(n, h)
    A = (L - sp.diags(kap.ravel())).tocsc()
    if n <= direct_cap:
        x = spla.splu(A).solve(rhs.ravel())
    else:
        import pyamg

        B = (-A).tocsr()
        ml = pyamg.smoothed_aggregation_solver(B, symmetry="symmetric")
        x = ml.solve(-rhs.ravel(), tol=tol, accel="cg", maxiter=200)
    return x.reshape(n, n)


def dirichlet_symbol(n, h):
    lam = (2 * np.cos(np.pi * np.arange(1, n + 1) / (n + 1)) - 2) / h ** 2
    return lam[:, None] + lam[None, :]


def helmholtz_dst(f, C, h, symbol=None):
    """Solve (Delta_h - C) x = f with zero Dirichlet data by a type-I DST."""
    n = f.shape[0]
    sym = dirichlet_symbol(n, h) if symbol is None else symbol
    den = sym - C
    if np.any(den == 0):
        raise ZeroDivisionError("Helmholtz symbol vanishes")
    return idstn(dstn(f, type=1) / den, type=1)


def concus_golub_shift(kap, rule="printed"):
    """Constant C approximating kappa: half range (printed) or midpoint."""
    hi, lo = float(np.max(kap)), float(np.min(kap))
    if rule == "printed":
        return 0.5 * (hi - lo)
    if rule == "midpoint":
        return 0.5 * (hi + lo)
    if rule == "geometric":
        return float(np.sqrt(hi * max(lo, 1e-300)))
    raise ValueError(rule)


def linear_step_fourier(kap, rhs, h, C=None, inner="cg", rtol=1e-3, maxiter=5000,
                        rule="geometric", symbol=None):
    """Approximate solution of (Delta_h - kappa) x = rhs via sine-basis Helmholtz solves.

    With ``inner='stationary'`` this is a single Helmholtz solve with the
    constant C.  With ``inner='cg'`` the Helmholtz solve preconditions CG on
    the symmetric positive operator kappa - Delta_h, stopped at relative
    residual ``rtol``.
    """
    n = kap.shape[0]
    sym = dirichlet_symbol(n, h) if symbol is None else symbol
    if C is None:
        C = concus_golub_shift(kap, rule)
    if inner == "stationary":
        return helmholtz_dst(rhs, C, h, sym), 1

    def matvec(x):
        x = x.reshape(n, n)
        xf = np.zeros((n + 2, n + 2))
        xf[1:-1, 1:-1] = x
        return (kap * x - laplacian(xf, h)).ravel()

    def prec(y):
        return -helmholtz_dst(y.reshape(n, n), C, h, sym).ravel()

    A = spla.LinearOperator((n * n, n * n), matvec=matvec, dtype=float)
    M = spla.LinearOperator((n * n, n * n), matvec=prec, dtype=float)
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = spla.cg(A, -rhs.ravel(), rtol=rtol, atol=0.0, maxiter=maxiter, M=M,
                      callback=cb)
    return x.reshape(n, n), count[0]


# ------------------------------------------------------------------ Newton

def newton_solve_u(PN, N, grid, method="fourier", pde_thresh=1e-9, max_iter=200,
                   v0=None, euler_cap=1400, direct_cap=1100, inner="cg",
                   inner_rtol=1e-3, rule=None):
    """Solve the self-duality equation for |P_N| on ``grid``.

    Parameters
    ----------
    PN : Polynomial
        Top differential coefficient (already scaled by R^N).
    N : int
        Rank, 2 or 3.
    method : str
        'euler' (C0 residual norm) or 'fourier' (L2 residual norm).
    v0 : ndarray, optional
        Starting correction on the interior nodes.

    Returns
    -------
    FieldGrid
        u on the full grid; ``info`` holds iteration diagnostics.
    """
    if method == "euler" and grid.nmesh > euler_cap:
        raise MemoryLimitError(f"euler backend capped at nmesh={euler_cap}")
    if method == "fourier" and not grid.is_dst_friendly():
        raise ValueError("fourier backend needs nmesh = 2^j - 1")
    if method not in ("euler", "fourier"):
        raise ValueError(method)
    norm = "C0" if method == "euler" else "L2"
    if rule is None:
        rule = "printed" if inner == "stationary" else "geometric"
    h, n = grid.h, grid.nmesh
    z = grid.mesh()
    a2 = np.abs(PN(z)) ** 2
    a2i = a2[1:-1, 1:-1]
    u0 = model_u0(PN, grid, N).values
    u = u0.copy()
    if v0 is not None:
        u[1:-1, 1:-1] += v0
    G = residual(u, a2, N, h)
    res = residual_norm(G, h, norm)
    hist = [res]
    inner_total = 0
    grow = 0
    sym = dirichlet_symbol(n, h) if method == "fourier" else None
    lap = laplacian_matrix(n, h) if method == "euler" else None
    it = 0
    while res >= pde_thresh:
        it += 1
        if it > max_iter:
            raise DivergenceError(f"no convergence in {max_iter} Newton steps (residual {res:g})")
        kap = kappa(u[1:-1, 1:-1], a2i, N)
        if method == "euler":
            dv = linear_step_euler(kap, -G, h, direct_cap, _lap=lap)
            ninner = 1
        else:
            dv, ninner = linear_step_fourier(kap, -G, h, inner=inner, rtol=inner_rtol,
                                             rule=rule, symbol=sym)
        inner_total += ninner
        step = 1.0
        while True:
            trial = u.copy()
            trial[1:-1, 1:-1] += step * dv
            Gt = residual(trial, a2, N, h)
            rt = residual_norm(Gt, h, norm)
            if np.isfinite(rt) and (rt < res or step < 1.0 / 64 or inner == "stationary"):
                break
            step /= 2
        if not np.isfinite(rt):
            raise FloatingPointError("non-finite residual")
        grow = grow + 1 if rt > res else 0
        if grow >= 10:
            raise DivergenceError("residual grew for 10 consecutive steps")
        u, G, res = trial, Gt, rt
        hist.append(res)
        log.debug("newton %d: residual %.3e (inner %d, step %g)", it, res, ninner, step)
    info = {"method": method, "norm": norm, "iterations": it,
            "inner_iterations": inner_total, "residual": res, "history": hist}
    return FieldGrid(u, grid, "u", info)


def prolong(v_coarse, grid_c, grid_f):
    """Interpolate an interior correction from a coarse grid onto a finer one."""
    full = np.zeros((grid_c.nmesh + 2, grid_c.nmesh + 2))
    full[1:-1, 1:-1] = v_coarse
    s = RectBivariateSpline(grid_c.x, grid_c.x, full, kx=3, ky=3)
    xf = grid_f.x[1:-1]
    return s(xf, xf)


# --------------------------------------------------------- interpolation

class _Partial:
    """Derivative spline (lower degree, precomputed coefficients)."""

    def __init__(self, spl, dx, dy):
        self.spl = spl.partial_derivative(dx, dy)

    def ev(self, x, y):
        return self.spl(x, y, grid=False)


class FieldInterpolant:
    """Bicubic spline evaluator of u and its partial derivatives.

    deriv='spline' differentiates the spline of u itself, so the partials are
    exactly consistent with the interpolated u.  deriv='central' instead
    splines central differences (one-sided, second order, at the boundary).
    """

    def __init__(self, field, deriv="spline"):
        g = field.grid
        self.grid = g
        self.deriv = deriv
        u = field.values
        x = g.x
        self._u = RectBivariateSpline(x, x, u, kx=3, ky=3)
        if deriv == "central":
            ux, uy = np.gradient(u, g.h, edge_order=2)
            self._ux = RectBivariateSpline(x, x, ux, kx=3, ky=3)
            self._uy = RectBivariateSpline(x, x, uy, kx=3, ky=3)
        elif deriv == "spline":
            self._ux = _Partial(self._u, 1, 0)
            self._uy = _Partial(self._u, 0, 1)
        else:
            raise ValueError(deriv)

    def _check(self, z):
        z = np.asarray(z)
        lim = self.grid.r * (1 + 1e-12)
        if np.any(np.abs(z.real) > lim) or np.any(np.abs(z.imag) > lim):
            raise ValueError("evaluation outside the grid square")
        return z

    def u(self, z):
        z = self._check(z)
        return self._u.ev(z.real, z.imag)

    def ux(self, z):
        z = self._check(z)
        return self._ux.ev(z.real, z.imag)

    def uy(self, z):
        z = self._check(z)
        return self._uy.ev(z.real, z.imag)

    def all(self, z):
        z = self._check(z)
        x, y = z.real, z.imag
        return self._u.ev(x, y), self._ux.ev(x, y), self._uy.ev(x, y)


def interpolate_field(field, deriv="spline"):
    return FieldInterpolant(field, deriv)


# ------------------------------------------------------------ Richardson

class DegenerateFitError(ArithmeticError):
    pass


def richardson_error(values, nmesh=None, h=None, window=(1.6, 2.4)):
    """Fit X(h) = X* + c h^p through three values and estimate the error.

    Parameters
    ----------
    values : sequence of 3 numbers (real or complex)
        Results ordered from coarsest to finest grid.
    nmesh, h : sequence of 3, optional
        Grid sizes or spacings; nmesh n gives h proportional to 1/(n+1).

    Returns
    -------
    estimate : float
        |X_finest - X*|.
    p : float
        Fitted exponent (nan when all values coincide).
    accepted : bool
        Whether p lies in ``window`` (True for the converged case).
    """
    X = np.asarray(values, dtype=complex)
    if h is None:
        if nmesh is None:
            raise ValueError("need nmesh or h")
        h = 1.0 / (np.asarray(nmesh, dtype=float) + 1)
    h = np.asarray(h, dtype=float)
    d1, d2 = X[1] - X[0], X[2] - X[1]
    if abs(d1) == 0 and abs(d2) == 0:
        return 0.0, float("nan"), True
    if abs(d2) == 0 or abs(d1) == 0:
        raise DegenerateFitError("one successive difference vanishes")
    ratio = d1 / d2
    if abs(ratio.imag) > 0.5 * abs(ratio) or ratio.real <= 0:
        raise DegenerateFitError("successive differences are inconsistent with a power law")
    r12, r23 = h[0] / h[1], h[1] / h[2]

    def f(p):
        return (r12 ** p - 1) * r23 ** p / (r23 ** p - 1) - abs(ratio)

    if abs(r12 - r23) < 1e-12 * r12:
        p = np.log(abs(ratio)) / np.log(r12)
    else:
        from scipy.optimize import brentq

        p = brentq(f, 1e-3, 20)
    # X_k = X* + c h_k^p  =>  X* = X_3 + d2 / (r23^p - 1)
    Xstar = X[2] + d2 / (r23 ** p - 1)
    est = float(abs(X[2] - Xstar))
    return est, float(p), bool(window[0] <= p <= window[1])


# ----------------------------------------------------------- snapshots

def save_field(field, path):
    meta = {"nmesh": field.grid.nmesh, "r": field.grid.r, "kind": field.kind,
            "info": {k: v for k, v in field.info.items() if k != "history"}}
    np.savez(path, values=field.values, meta=json.dumps(meta))


def load_field(path):
    with np.load(path) as f:
        meta = json.loads(str(f["meta"]))
        vals = f["values"]
    return FieldGrid(vals, Grid2D(meta["nmesh"], meta["r"]), meta["kind"], meta["info"])

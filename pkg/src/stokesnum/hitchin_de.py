"""Spectral coordinates of the Hitchin section from the self-duality solution.

With the harmonic metric h = diag(e^{-u}, e^{u}) (rank 2) or
diag(e^{-u}, 1, e^{u}) (rank 3, P_2 = 0) in the holomorphic frame, the flat
family D_h + zeta^{-1} phi + zeta phi^dagger has components

    A_z    = h^{-1} dh/dz + zeta^{-1} phi
    A_zbar = zeta phi^dagger,     phi^dagger = h^{-1} conj(phi)^T h

rank 2:  h^{-1} dh/dz = diag(-du, du),
         phi^dagger = [[0, e^{2u}], [-conj(P) e^{-2u}, 0]]
rank 3:  h^{-1} dh/dz = diag(-du, 0, du),
         phi^dagger = [[0, e^u, 0], [0, 0, e^u], [-conj(P) e^{-2u}, 0, 0]]

where du = (u_x - i u_y) / 2.  Flatness of this family is exactly the
self-duality equation solved in ``pde``.
"""
import time

import numpy as np

from . import catalog as cat
from . import pde
from .oper_de import ODE_DEFAULTS, ode_error_estimate, spectral_coords_DE, subdominant_vectors


class HitchinConnection:
    """Flat connection of the Hitchin section for differentials ``w``.

    ``w`` already includes the R^N scaling; ``field`` is an interpolant of
    the solution u for |P_N|.
    """

    def __init__(self, w, field, zeta=1.0):
        if w.N not in (2, 3):
            raise ValueError("rank 2 or 3 only")
        if any(k != w.N for k in w.nonzero_ks()):
            raise ValueError("only P_N may be nonzero")
        self.w = w
        self.N = w.N
        self.field = field
        self.zeta = complex(zeta)
        self.PN = w.PN

    def _parts(self, z):
        z = np.asarray(z, dtype=complex)
        u, ux, uy = self.field.all(z)
        return z, u, 0.5 * (ux - 1j * uy), self.PN(z)

    def Az(self, z):
        return self.parts(z)[0]

    def Azbar(self, z):
        return self.parts(z)[1]

    def parts(self, z):
        """Both components (A_z, A_zbar) from one evaluation of u."""
        z, u, du, p = self._parts(z)
        N = self.N
        az = cat.higgs_matrix(self.w, z) / self.zeta
        az[..., 0, 0] -= du
        az[..., -1, -1] += du
        out = np.zeros(z.shape + (N, N), dtype=complex)
        if N == 2:
            out[..., 0, 1] = np.exp(2 * u)
        else:
            out[..., 0, 1] = np.exp(u)
            out[..., 1, 2] = np.exp(u)
        out[..., -1, 0] = -np.conj(p) * np.exp(-2 * u)
        return az, out * self.zeta


def hitchin_connection_matrix(w, field, zeta=1.0):
    return HitchinConnection(w, field, zeta)


def scaled_normalized(theory, params, R):
    """Differentials R w pulled back to quasi-monic centered form."""
    w = cat.build_differentials(theory, params)
    wn, _ = cat.normalize_quasi_monic_centered(cat.scale_differentials(w, R))
    return w, wn


def solve_section(wn, nmesh=1023, r=None, method="fourier", pde_thresh=1e-9, **kw):
    """Solve the self-duality equation for normalized differentials ``wn``.

    The grid half-width is ``r`` (default: the Hitchin radius rule divided
    by 0.98, so the ODE rays stay inside the grid).
    """
    if r is None:
        r = cat.choose_radius(wn, "hitchin") / 0.98
    grid = pde.Grid2D(nmesh, r)
    return pde.newton_solve_u(wn.PN, wn.N, grid, method=method, pde_thresh=pde_thresh, **kw)


def hitchin_frames(theory, params=None, R=1.0, zeta=1.0, pde_params=None,
                   ode_params=None, field=None, radius=None):
    """FrameSet for the Hitchin section at (R, zeta).

    Parameters
    ----------
    pde_params : dict
        pde_nmesh, pde_thresh, method and optionally r (grid half-width).
    field : FieldGrid, optional
        A precomputed u for the same normalized differentials.
    radius : float, optional
        ODE radius; defaults to 0.98 of the grid half-width.
    """
    pp = dict(pde.PDE_DEFAULTS)
    pp.update(pde_params or {})
    w, wn = scaled_normalized(theory, params, R)
    t0 = time.perf_counter()
    if field is None:
        field = solve_section(wn, pp["pde_nmesh"], pp.get("r"), pp["method"], pp["pde_thresh"])
    t_pde = time.perf_counter() - t0
    rad = 0.98 * field.grid.r if radius is None else radius
    if rad > 0.98 * field.grid.r + 1e-12:
        raise ValueError("ODE radius must be at most 0.98 of the grid half-width")
    conn = HitchinConnection(wn, pde.interpolate_field(field), zeta)
    dirs = cat.labeled_directions(theory, w, zeta)
    p = dict(ODE_DEFAULTS)
    p.update(ode_params or {})
    fs = subdominant_vectors(conn, dirs, rad, p)
    fs.pde_info = dict(field.info, t_pde=t_pde, nmesh=field.grid.nmesh, r=field.grid.r)
    return fs, field


def hitchin_spectral_coords_DE(theory, params=None, R=1.0, zeta=1.0, pde_params=None,
                               ode_params=None, sign_convention="paper", with_error=False,
                               field=None):
    """Spectral coordinates X_i of the basis charges on the Hitchin section."""
    fs, field = hitchin_frames(theory, params, R, zeta, pde_params, ode_params, field)
    X = spectral_coords_DE(fs, theory, sign_convention)
    if with_error:
        return X, ode_error_estimate(fs, theory), fs
    return X


GCI_SAFETY = 1.25


def de_error_estimate(values, nmesh, ode_abs=0.0, safety=GCI_SAFETY):
    """Error estimate of the finest-grid value of one coordinate.

    Richardson estimate times a safety factor (grid convergence index)
    plus the absolute ODE estimate.  When the ladder differences sit at the
    ODE noise level the value is treated as converged and the estimate is
    that noise level.

    Returns
    -------
    estimate : float
    p : float or None
        fitted exponent (None when converged at noise level or degenerate)
    accepted : bool
    """
    v = np.asarray(values, dtype=complex)
    spread = float(np.max(np.abs(np.diff(v))))
    noise = 10 * ode_abs + 1e-13 * float(np.max(np.abs(v)))
    if spread <= noise:
        return ode_abs + spread, None, True
    try:
        est, p, acc = pde.richardson_error(v, nmesh=nmesh)
    except pde.DegenerateFitError:
        return ode_abs + spread, None, False
    return safety * est + ode_abs, (None if np.isnan(p) else p), acc


def richardson_ladder(theory, params=None, R=1.0, zeta=1.0, ladder=(255, 511, 1023),
                      pde_params=None, ode_params=None, sign_convention="paper"):
    """Coordinates on a ladder of grids with an error estimate per coordinate.

    Returns
    -------
    values : ndarray, shape (len(ladder), n)
    estimates : list of (estimate, p, accepted) per coordinate, see
        ``de_error_estimate``; the ODE part comes from the finest grid.
    """
    vals = []
    for n in ladder:
        pp = dict(pde_params or {})
        pp["pde_nmesh"] = n
        X, err, _ = hitchin_spectral_coords_DE(theory, params, R, zeta, pp, ode_params,
                                               sign_convention, with_error=True)
        vals.append(X)
    vals = np.array(vals)
    ode_abs = err * np.abs(vals[-1])
    ests = [de_error_estimate(vals[-3:, i], list(ladder)[-3:], ode_abs[i])
            for i in range(vals.shape[1])]
    return vals, ests

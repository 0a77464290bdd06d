"""Periods Z_gamma of the Liouville form y dz on the spectral curve.

Rank 2: Z over the lift of a segment between two simple zeros of P_2 is
2 * int sqrt(-P_2) dz, computed with Gauss-Jacobi quadrature, which absorbs
the square-root endpoint behaviour exactly.

Rank 3: Z over a closed contour in the z-plane lifted to one sheet of
y^3 + P_2 y + P_3 = 0, with the sheet followed by nearest-root matching.
The integrand is smooth and periodic so the trapezoid rule converges
geometrically.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

from . import catalog as cat


class BranchError(ValueError):
    pass


@dataclass(frozen=True)
class PeriodVector:
    values: np.ndarray
    params: dict

    def __getitem__(self, i):
        return self.values[i]

    def __len__(self):
        return len(self.values)


def period_of(charge, pv):
    """Integer combination sum_i charge_i Z_{gamma_i}."""
    vals = pv.values if isinstance(pv, PeriodVector) else np.asarray(pv)
    charge = np.asarray(charge)
    if charge.shape != vals.shape:
        raise ValueError(f"charge of length {len(charge)} against {len(vals)} periods")
    return complex(charge @ vals)


def is_pure_flavor(charge, theory):
    charge = np.asarray(charge)
    if charge.shape != (theory.lattice_rank,):
        raise ValueError("charge length does not match the lattice rank")
    return bool(np.all(theory.intersection @ charge == 0))


# ---------------------------------------------------------------- rank 2

def _gauss_jacobi_segment(P2, za, zb, branch, n):
    """2 * int_{za}^{zb} sqrt(-P2) dz with n Gauss-Jacobi nodes."""
    d = cat.degree(P2)
    q, rem = divmod(P2, cat.Polynomial([-za, 1]))
    q, rem2 = divmod(q, cat.Polynomial([-zb, 1]))
    others = cat.roots(q)
    delta = zb - za
    x, wts = roots_jacobi(n, 0.5, 0.5)  # weight (1-x)^1/2 (1+x)^1/2
    s = 0.5 * (x + 1)
    z = za + delta * s
    zm = za + 0.5 * delta
    # -P2 = delta^2 s (1 - s) q(z) ; sqrt of q tracked from the midpoint
    g_mid = delta ** 2 * q(zm)
    logratio = np.zeros_like(z)
    for r in others:
        if abs(r - zm) < 1e-300:
            raise BranchError("root at segment midpoint")
        logratio += np.log((z - r) / (zm - r))
    if d < 2:
        raise BranchError("degree too small")
    h = np.sqrt(g_mid) * np.exp(0.5 * logratio)
    # sign so that y at the midpoint equals branch * principal sqrt(-P2(zm))
    y_mid = 0.5 * np.sqrt(g_mid)
    ref = np.sqrt(-P2(zm))
    sgn = 1.0 if abs(y_mid - ref) < abs(y_mid + ref) else -1.0
    # s(1-s) = (1-x)(1+x)/4, so sqrt gives a factor 1/2; ds = dx/2
    integral = delta * np.sum(wts * h) * 0.25
    return 2 * branch * sgn * integral


def numeric_period_n2(P2, z_a, z_b, branch=1, tol=1e-13):
    """2 int_{z_a}^{z_b} sqrt(-P2(z)) dz along the straight segment.

    The branch is the one equal to ``branch`` times the principal square
    root of -P2 at the segment midpoint, continued along the segment.
    """
    P2 = cat.poly(P2.coef if hasattr(P2, "coef") else P2)
    for z in (z_a, z_b):
        if abs(P2(z)) > 1e-10 * max(1.0, np.max(np.abs(P2.coef))):
            raise BranchError(f"{z} is not a root")
        if abs(P2.deriv()(z)) < 1e-10:
            raise BranchError(f"{z} is not a simple root")
    others = [r for r in cat.roots(P2) if min(abs(r - z_a), abs(r - z_b)) > 1e-8]
    if len(others) != cat.degree(P2) - 2:
        raise BranchError("segment endpoints are not two distinct simple roots")
    for r in others:
        s = ((r - z_a) / (z_b - z_a))
        if abs(s.imag) < 1e-12 and 0 < s.real < 1:
            raise BranchError("another root lies on the segment")
    n, prev = 16, None
    while n <= 4096:
        val = _gauss_jacobi_segment(P2, z_a, z_b, branch, n)
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return complex(val)
        prev, n = val, 2 * n
    return complex(val)


# ---------------------------------------------------------------- rank 3

def fibre_roots(w, z):
    """The N values of y over z: roots of the characteristic polynomial of -phi."""
    if w.N == 2:
        y = np.sqrt(-complex(w.P(2)(z)))
        return np.array([y, -y])
    p2, p3 = complex(w.P(2)(z)), complex(w.P(3)(z))
    return np.roots([1, 0, p2, p3])


def _track_sheets(w, zs, y0):
    """Follow the sheet starting at y0 along the closed sampled path zs."""
    ys = np.empty(len(zs), dtype=complex)
    y = y0
    for k, z in enumerate(zs):
        cand = fibre_roots(w, z)
        dist = np.abs(cand - y)
        order = np.argsort(dist)
        if dist[order[1]] < 3 * dist[order[0]] and dist[order[0]] > 1e-12:
            raise BranchError("sheet tracking ambiguous; refine the contour")
        y = cand[order[0]]
        ys[k] = y
    return ys


@dataclass(frozen=True)
class LoopContour:
    """Closed contour z(t), t in [0, 2pi), with a starting sheet.

    ``kind`` is 'eight' (figure-eight around roots ``a`` and ``b`` of P_N,
    positively around ``b``) or 'circle' (a circle of given radius about the
    origin).  ``sheet`` picks the starting value of y at t = 0 as the fibre
    root closest to ``sheet_hint``.  Figure-eight lobes have aspect
    ``width``.
    """

    kind: str
    sheet_hint: complex
    a: int = 0
    b: int = 1
    width: float = 0.4
    radius: float = 10.0

    def path(self, w, t, root_list):
        if self.kind == "eight":
            ra, rb = root_list[self.a], root_list[self.b]
            m, h = 0.5 * (ra + rb), 0.5 * (rb - ra)
            zeta = 1.5 * np.sin(t) + 1j * self.width * np.sin(2 * t)
            dzeta = 1.5 * np.cos(t) + 2j * self.width * np.cos(2 * t)
            return m + h * zeta, h * dzeta
        if self.kind == "circle":
            e = np.exp(1j * t)
            return self.radius * e, 1j * self.radius * e
        raise ValueError(self.kind)


def loop_period(w, contour, root_list=None, tol=1e-12, nmax=1 << 16):
    """Integral of y dz over the lift of ``contour`` starting on the hinted sheet."""
    if root_list is None:
        root_list = sorted_roots(w.PN)
    n, prev = 256, None
    while n <= nmax:
        t = 2 * np.pi * np.arange(n) / n
        z, dz = contour.path(w, t, root_list)
        cand = fibre_roots(w, z[0])
        y0 = cand[np.argmin(np.abs(cand - contour.sheet_hint))]
        ys = _track_sheets(w, z, y0)
        # closure check: continuing one more step must return to the start sheet
        cand = fibre_roots(w, z[0])
        if np.argmin(np.abs(cand - ys[-1])) != np.argmin(np.abs(cand - y0)):
            raise BranchError("lifted contour is not closed")
        val = np.sum(ys * dz) * (2 * np.pi / n)
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return complex(val)
        prev, n = val, 2 * n
    return complex(val)


def sorted_roots(p):
    """Roots ordered by (real part, imaginary part), rounded for stability."""
    r = cat.roots(p)
    return sorted(r, key=lambda z: (round(z.real, 9), round(z.imag, 9)))


def numeric_period_n3(w, charge, theory):
    """Period of ``charge`` for a rank-3 theory at differentials w."""
    basis = _loop_basis(theory)
    vals = np.array([loop_period(w, c) for c in basis["contours"]])
    comb = basis["matrix"] @ vals
    return complex(np.asarray(charge) @ comb)


# Contour data for the rank-3 bases.  Each basis charge is an integer
# combination (rows of "matrix") of lifted loops; the combinations were fixed
# by matching the loop periods against the tabulated six-figure values.
_LOOP_BASES = {
    # P_3 = (1 - z^2)/2, roots sorted as (-1, 1)
    "A2A1": {
        "contours": (LoopContour("eight", 0.3969 - 0.6874j, 0, 1),
                     LoopContour("eight", 0.3969 + 0.6874j, 0, 1)),
        "matrix": -np.eye(2),
    },
    # P_3 = (z^3 - 3 z^2 - 2)/2, roots sorted as (-0.098-0.785i, -0.098+0.785i, 3.196)
    "A2A2": {
        "contours": (LoopContour("eight", -0.5025 - 0.8703j, 0, 1),
                     LoopContour("eight", 1.4244 - 0.0726j, 0, 2),
                     LoopContour("circle", 3.5203 + 6.0973j, radius=10.0),
                     LoopContour("circle", -7.0406 + 0j, radius=10.0)),
        "matrix": np.diag([1.0, 1.0, -1.0, -1.0]),
    },
}


def _loop_basis(theory):
    if theory.name not in _LOOP_BASES:
        raise KeyError(f"no loop data for {theory.name}")
    return _LOOP_BASES[theory.name]


def a2a2_base_periods():
    """Basis periods of the (A2,A2) theory at its basepoint."""
    w = cat.DifferentialTuple(3, {2: cat.poly([0]), 3: cat.poly([-1, 0, -1.5, 0.5])})
    b = _LOOP_BASES["A2A2"]
    vals = np.array([loop_period(w, c) for c in b["contours"]])
    return b["matrix"] @ vals


# ---------------------------------------------------------------- families

_SEGMENTS_N2 = {
    # (root index a, root index b, branch) per basis charge at the basepoint,
    # indices into sorted_roots(P_2)
    "A1A2": ((2, 1, 1), (1, 0, 1)),        # roots (w^2, w, 1)
    "A1A3": ((0, 3, 1), (0, 2, 1), (1, 3, 1)),  # roots (-1, -i, i, 1)
}


def base_periods(theory):
    return PeriodVector(np.array(theory.base_periods), dict(theory.basepoint))


def periods_at(theory, params=None, nsteps=64):
    """Basis periods at family parameters, continued from the basepoint.

    Roots and branches are followed along the straight path in parameter
    space; each step keeps the sign that is closest to the previous value.
    """
    params = dict(params or {})
    full = dict(theory.basepoint)
    full.update(params)
    if all(complex(full[k]) == complex(theory.basepoint[k]) for k in full):
        return base_periods(theory)
    if theory.name == "A1A2" and complex(full["Lambda"]) == 0:
        c = complex(full["c"])
        return PeriodVector(np.array(theory.base_periods) * c ** (5 / 6), full)
    if theory.N == 2:
        return PeriodVector(_continue_n2(theory, full, nsteps), full)
    return PeriodVector(_continue_n3(theory, full, nsteps), full)


def _continue_n2(theory, full, nsteps):
    base = theory.basepoint
    w0 = cat.build_differentials(theory)
    rts = np.array(sorted_roots(w0.PN))
    segs = _SEGMENTS_N2[theory.name]
    prev = np.array(theory.base_periods)
    for s in np.linspace(0, 1, nsteps + 1)[1:]:
        p = {k: complex(base[k]) + s * (complex(full[k]) - complex(base[k])) for k in base}
        w = cat.build_differentials(theory, p)
        new = cat.roots(w.PN)
        rts = np.array([new[np.argmin(np.abs(new - r))] for r in rts])
        cur = []
        for (ia, ib, _), zp in zip(segs, prev):
            v = numeric_period_n2(w.PN, rts[ia], rts[ib], 1)
            cur.append(v if abs(v - zp) < abs(v + zp) else -v)
        prev = np.array(cur)
    return prev


def _continue_n3(theory, full, nsteps):
    import dataclasses

    base = theory.basepoint
    b = _loop_basis(theory)
    contours = list(b["contours"])
    w0 = cat.build_differentials(theory)
    rts = np.array(sorted_roots(w0.PN))
    for s in np.linspace(0, 1, nsteps + 1)[1:]:
        p = {k: complex(base[k]) + s * (complex(full[k]) - complex(base[k])) for k in base}
        w = cat.build_differentials(theory, p)
        new = cat.roots(w.PN)
        rts = np.array([new[np.argmin(np.abs(new - r))] for r in rts])
        upd = []
        for c in contours:
            z0, _ = c.path(w, np.zeros(1), list(rts))
            cand = fibre_roots(w, z0[0])
            upd.append(dataclasses.replace(c, sheet_hint=complex(cand[np.argmin(np.abs(cand - c.sheet_hint))])))
        contours = upd
    vals = np.array([loop_period(w, c, list(rts)) for c in contours])
    return b["matrix"] @ vals

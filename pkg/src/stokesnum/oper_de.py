"""Direct computation of spectral coordinates from subdominant solutions.

The flat connection d + A(z) dz (+ B(z) dzbar for the Hitchin section) is
transported from the origin to a point far out along the bisector of each
Stokes sector.  The eigenvector of the transport matrix with the smallest
eigenvalue approximates the subdominant line, and ratios of determinants of
these vectors give the spectral coordinates.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import catalog as cat
from .ode import dopri45

ODE_DEFAULTS = {"ode_thresh": 1e-14, "ode_rstep": 1e-4}


class EigenTieError(ArithmeticError):
    pass


class PrecisionLossWarning(RuntimeWarning):
    pass


class OperConnection:
    """Connection d + hbar^{-1} phi_w, holomorphic (no dzbar part)."""

    def __init__(self, w, hbar=1.0):
        self.w = w
        self.N = w.N
        self.hbar = hbar

    def Az(self, z):
        return cat.higgs_matrix(self.w, z) / self.hbar

    Azbar = None


class ZeroConnection:
    def __init__(self, N):
        self.N = N

    def Az(self, z):
        return np.zeros(np.shape(z) + (self.N, self.N), dtype=complex)

    Azbar = None


def _rhs(conn, ends):
    """Right-hand side for a batch of segments 0 -> ends[k]."""
    ends = np.asarray(ends, dtype=complex)
    e = ends[:, None, None]
    if conn.Azbar is None:
        def rhs(tau, s):
            return -np.matmul(conn.Az(tau * ends) * e, s)
    else:
        eb = np.conj(e)
        both = getattr(conn, "parts", None) or (lambda z: (conn.Az(z), conn.Azbar(z)))

        def rhs(tau, s):
            az, azb = both(tau * ends)
            return -np.matmul(az * e + azb * eb, s)
    return rhs


def transport_batch(conn, angles, radius, ode_params=None):
    """Transport matrices for several rays integrated with a shared step sequence."""
    p = dict(ODE_DEFAULTS)
    p.update(ode_params or {})
    if radius <= 0:
        raise ValueError("radius must be positive")
    ends = radius * np.exp(1j * np.asarray(angles, dtype=float))
    y0 = np.broadcast_to(np.eye(conn.N, dtype=complex), (len(ends), conn.N, conn.N))
    F, _ = dopri45(_rhs(conn, ends), y0, 0.0, 1.0, rtol=p["ode_thresh"],
                   first_step=p["ode_rstep"], max_step=2 * p["ode_rstep"],
                   batched=True)
    return F


def parallel_transport(conn, angle, radius, ode_params=None):
    """Transport matrix along z(tau) = tau r e^{i angle}, tau in [0, 1].

    Solves s' = -(A_z z' + A_zbar zbar') s columnwise starting from the
    identity with Dormand-Prince 4(5), relative tolerance ``ode_thresh`` and
    zero absolute tolerance.
    """
    return transport_batch(conn, [angle], radius, ode_params)[0]


def _normalize(v):
    v = v / np.linalg.norm(v)
    k = np.argmax(np.abs(v))
    return v * (abs(v[k]) / v[k])


@dataclass
class FrameSet:
    """Subdominant vectors at the basepoint, one per Stokes sector."""

    vectors: np.ndarray                # (d+N, N), row j-1 is sector j
    angles: np.ndarray
    radius: float
    frames: np.ndarray = field(repr=False)       # (d+N, N, N) transport matrices
    eigvals: np.ndarray = field(repr=False)      # (d+N, N) ascending modulus
    eigvecs: np.ndarray = field(repr=False)      # (d+N, N, N) columns
    ode_thresh: float = 1e-14
    componentwise_err: np.ndarray = field(default=None, repr=False)

    @property
    def eigen_gaps(self):
        return np.abs(self.eigvals[:, 1:] - self.eigvals[:, :1])


def frame_eigendata(F, tie_rtol=1e-10):
    lam, V = np.linalg.eig(F)
    order = np.argsort(np.abs(lam))
    lam, V = lam[order], V[:, order]
    if abs(lam[1]) - abs(lam[0]) < tie_rtol * abs(lam[1]):
        raise EigenTieError("two smallest eigenvalues have equal modulus")
    return lam, V


def subdominant_vectors(conn, directions, radius, ode_params=None):
    """Transport along each direction and keep the smallest-eigenvalue eigenvector."""
    p = dict(ODE_DEFAULTS)
    p.update(ode_params or {})
    frames, lams, vecs, subs = [], [], [], []
    for F in transport_batch(conn, directions, radius, p):
        lam, V = frame_eigendata(F)
        frames.append(F)
        lams.append(lam)
        vecs.append(V)
        subs.append(_normalize(V[:, 0]))
    fs = FrameSet(np.array(subs), np.asarray(directions), float(radius),
                  np.array(frames), np.array(lams), np.array(vecs), p["ode_thresh"])
    fs.componentwise_err = vector_error_bounds(fs)
    return fs


def vector_error_bounds(fs):
    """Componentwise error bound of each subdominant vector.

    ode_thresh * sum_{j>=2} |v_j| (|v_j^*| |F| |v_1|) / |lambda_1 - lambda_j|
    with v_j^* the dual basis (rows of V^{-1}).  The result is rescaled to
    the normalization used for the stored vectors.
    """
    out = np.zeros(fs.vectors.shape)
    for s in range(len(fs.vectors)):
        F, lam, V = fs.frames[s], fs.eigvals[s], fs.eigvecs[s]
        Vd = np.linalg.inv(V)
        v1 = V[:, 0]
        acc = np.zeros(V.shape[0])
        for j in range(1, V.shape[0]):
            c = np.abs(Vd[j]) @ np.abs(F) @ np.abs(v1)
            acc += np.abs(V[:, j]) * c / abs(lam[0] - lam[j])
        out[s] = fs.ode_thresh * acc / np.linalg.norm(v1)
    return out


def _check_indices(fs, idx, n):
    if len(idx) != n:
        raise IndexError(f"expected {n} indices")
    if len(set(idx)) != n and n == fs.vectors.shape[1]:
        raise IndexError("repeated sector index")
    for i in idx:
        if not 1 <= i <= len(fs.vectors):
            raise IndexError(f"sector index {i} out of range")


def det_p(vectors, idx):
    return complex(np.linalg.det(np.array([vectors[i - 1] for i in idx]).T))


def det_q(vectors, idx):
    v = [vectors[i - 1] for i in idx]
    cols = []
    for a, b in ((0, 1), (2, 3), (4, 5)):
        c = np.cross(v[a], v[b])
        if np.linalg.norm(c) < 1e-300:
            raise ArithmeticError("vanishing cross product: coincident lines")
        cols.append(c)
    return complex(np.linalg.det(np.array(cols).T))


def det_invariant_p(frames, indices):
    """p(i_1, ..., i_N) = det(s_{i_1}, ..., s_{i_N})."""
    _check_indices(frames, indices, frames.vectors.shape[1])
    return det_p(frames.vectors, indices)


def det_invariant_q(frames, indices):
    """q(a, ..., f) = det(s_a x s_b, s_c x s_d, s_e x s_f)."""
    if frames.vectors.shape[1] != 3:
        raise ValueError("q is defined for rank 3")
    _check_indices(frames, indices, 6)
    return det_q(frames.vectors, indices)


def _term(vectors, term):
    kind, idx = term
    return det_p(vectors, idx) if kind == "p" else det_q(vectors, idx)


def evaluate_formula(vectors, formula):
    num = np.prod([_term(vectors, t) for t in formula.numerator])
    den = np.prod([_term(vectors, t) for t in formula.denominator])
    return formula.sign * num / den


def spectral_coords_DE(frames, theory, sign_convention="paper"):
    """Spectral coordinates X_i of the basis charges."""
    out = []
    for f in theory.coord_formulas:
        terms = [abs(_term(frames.vectors, t)) for t in f.numerator + f.denominator]
        if min(terms) < 1e-8:
            warnings.warn("near-zero determinant; relative precision lost",
                          PrecisionLossWarning, stacklevel=2)
        out.append(evaluate_formula(frames.vectors, f))
    out = np.array(out)
    if sign_convention == "code":
        out = -out
    elif sign_convention != "paper":
        raise ValueError(sign_convention)
    return out


def _term_error(vectors, errs, term, h=1e-12):
    """Linearized error of one determinant from componentwise vector errors."""
    kind, idx = term
    base = _term(vectors, term)
    tot = 0.0
    for i in sorted(set(idx)):
        for c in range(vectors.shape[1]):
            if errs[i - 1, c] == 0:
                continue
            g = 0.0
            for dv in (h, 1j * h):
                pert = vectors.copy()
                pert[i - 1, c] += dv
                g = max(g, abs(_term(pert, term) - base) / h)
            tot += g * errs[i - 1, c]
    return tot, base


def ode_error_estimate(frames, theory, factor=2.0):
    """Relative error estimate of each X_i from the ODE tolerance.

    Componentwise bounds on the subdominant vectors are pushed through each
    determinant by finite differences and combined by logarithmic
    differentiation; the result is ``factor`` times the linearized bound.
    """
    errs = frames.componentwise_err
    if errs is None:
        errs = vector_error_bounds(frames)
    out = []
    for f in theory.coord_formulas:
        rel = 0.0
        for t in f.numerator + f.denominator:
            e, b = _term_error(frames.vectors, errs, t)
            rel += e / abs(b)
        out.append(factor * rel)
    return np.array(out)


# ------------------------------------------------------------------ opers

def oper_frames(theory, params=None, hbar=1.0, ode_params=None, radius=None,
                w=None):
    """FrameSet for the oper d + hbar^{-1} phi_w.

    The differentials are rescaled to hbar^{-1} w and pulled back so that
    P_N is quasi-monic and centered; the transport then uses the basepoint 0.
    """
    if w is None:
        w = cat.build_differentials(theory, params)
    ws = cat.scale_differentials(w, 1.0 / hbar)
    wn, _ = cat.normalize_quasi_monic_centered(ws)
    # the pullback has a > 0, so directions at infinity are unchanged; the
    # phase of hbar is passed separately so labels follow it continuously
    dirs = cat.labeled_directions(theory, w, hbar)
    r = cat.choose_radius(wn, "oper") if radius is None else radius
    return subdominant_vectors(OperConnection(wn), dirs, r, ode_params)


def oper_coords_DE(theory, params=None, hbar=1.0, ode_params=None,
                   sign_convention="paper", with_error=False, radius=None):
    fs = oper_frames(theory, params, hbar, ode_params, radius)
    X = spectral_coords_DE(fs, theory, sign_convention)
    if with_error:
        return X, ode_error_estimate(fs, theory), fs
    return X

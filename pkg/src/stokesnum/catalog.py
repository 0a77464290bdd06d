"""Hardcoded theories, polynomial differentials and normalization helpers.

Polynomials are ``numpy.polynomial.Polynomial`` objects with complex
coefficients in ascending order.  A tuple of differentials is stored as a
:class:`DifferentialTuple` mapping degree k to the coefficient polynomial
P_k of phi_k = P_k dz^k.
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import gamma


class UnknownTheoryError(KeyError):
    pass


class DegreeError(ValueError):
    pass


def poly(coeffs):
    """Complex polynomial from ascending coefficients, trailing zeros trimmed."""
    c = np.atleast_1d(np.asarray(coeffs, dtype=complex))
    nz = np.nonzero(c)[0]
    if len(nz) == 0:
        return Polynomial([0j])
    return Polynomial(c[: nz[-1] + 1])


def degree(p):
    """Degree of p, or -1 for the zero polynomial."""
    c = p.coef
    nz = np.nonzero(c)[0]
    return -1 if len(nz) == 0 else int(nz[-1])


def leading(p):
    d = degree(p)
    return 0j if d < 0 else complex(p.coef[d])


def roots(p):
    """Roots via companion-matrix eigenvalues."""
    d = degree(p)
    if d < 1:
        return np.zeros(0, dtype=complex)
    return np.linalg.eigvals(np.polynomial.polynomial.polycompanion(p.coef[: d + 1]))


@dataclass(frozen=True)
class DifferentialTuple:
    """Tuple (phi_2, ..., phi_N) with phi_k = P_k dz^k."""

    N: int
    phi: Dict[int, Polynomial]

    def P(self, k):
        return self.phi.get(k, Polynomial([0j]))

    @property
    def PN(self):
        return self.P(self.N)

    @property
    def d(self):
        return degree(self.PN)

    def nonzero_ks(self):
        return [k for k in range(2, self.N + 1) if degree(self.P(k)) >= 0]

    def __repr__(self):
        parts = ", ".join(f"P{k}={self.P(k).coef.tolist()}" for k in range(2, self.N + 1))
        return f"DifferentialTuple(N={self.N}, {parts})"


def validate_degrees(w: DifferentialTuple, strict=True):
    """Check deg P_k <= (k/N) d, strictly for k < N when ``strict``."""
    d = w.d
    if d < 1:
        raise DegreeError("P_N must be nonconstant")
    for k in range(2, w.N):
        dk = degree(w.P(k))
        if dk < 0:
            continue
        bound = k * d / w.N
        if dk > bound or (strict and dk >= bound):
            raise DegreeError(f"deg P_{k} = {dk} violates bound {bound}")
    return w


@dataclass(frozen=True)
class CoordinateFormula:
    """Signed ratio of determinant products.

    Terms are tuples ``('p', (i1, ..., iN))`` or ``('q', (a, b, c, d, e, f))``
    with 1-based sector labels.
    """

    numerator: Tuple
    denominator: Tuple
    sign: int = 1

    def indices(self, part):
        out = []
        for _, idx in part:
            out.extend(idx)
        return sorted(out)

    def is_balanced(self):
        return self.indices(self.numerator) == self.indices(self.denominator)


def P(*idx):
    return ("p", tuple(idx))


def Q(*idx):
    return ("q", tuple(idx))


@dataclass(frozen=True)
class Theory:
    name: str
    N: int
    d: int
    param_names: Tuple[str, ...]
    basepoint: Dict[str, complex]
    family: Callable = field(repr=False)
    intersection: np.ndarray = field(repr=False)
    gamma_prime: Tuple = field(repr=False)  # ((charge tuple, Omega), ...)
    base_periods: np.ndarray = field(repr=False)
    theta0: float = 0.0
    coord_formulas: Tuple = field(repr=False, default=())
    # sector label j uses the direction with index sector_perm[j - 1] in the
    # counterclockwise list of stokes_ray_directions; None means identity
    sector_perm: Tuple = None

    @property
    def lattice_rank(self):
        return self.intersection.shape[0]

    @property
    def charges(self):
        return [np.array(c) for c, _ in self.gamma_prime]

    @property
    def omegas(self):
        return np.array([om for _, om in self.gamma_prime])

    def pairing(self, a, b):
        return int(np.asarray(a) @ self.intersection @ np.asarray(b))

    def basis(self, i):
        e = np.zeros(self.lattice_rank, dtype=int)
        e[i] = 1
        return e


def _M():
    return np.sqrt(3 * np.pi) * gamma(4 / 3) / gamma(11 / 6)


def _a1a2_family(Lambda=0, c=1):
    return DifferentialTuple(2, {2: poly([-c, -Lambda, 0, 1])})


def _a1a3_family():
    return DifferentialTuple(2, {2: poly([-1, 0, 0, 0, 1])})


def _a2a1_family(c=0):
    return DifferentialTuple(3, {2: poly([c]), 3: poly([0.5, 0, -0.5])})


def _a2a2_family():
    return DifferentialTuple(3, {2: poly([0]), 3: poly([-1, 0, -1.5, 0.5])})


def _a1a2_periods():
    M = _M()
    return np.array([np.exp(5j * np.pi / 6) * M, -1j * M])


def _a1a3_periods():
    z1 = 2 * np.sqrt(np.pi) * gamma(5 / 4) / gamma(7 / 4)
    return np.array([z1, 0.5 * (1 + 1j) * z1, 0.5 * (1 + 1j) * z1])


def _a2a1_periods():
    # Gamma(-1/6) < 0; the modulus is taken so that arg Z_1 = 5 pi / 6
    z1 = (np.exp(5j * np.pi / 6) * 12 * 2 ** (2 / 3) * np.pi ** 1.5
          / (5 * abs(gamma(-1 / 6)) * gamma(2 / 3)))
    return np.array([z1, np.exp(2j * np.pi / 3) * z1])


def _build():
    cat = {}
    cat["A1A2"] = Theory(
        name="A1A2", N=2, d=3, param_names=("Lambda", "c"),
        basepoint={"Lambda": 0, "c": 1}, family=_a1a2_family,
        intersection=np.array([[0, 1], [-1, 0]]),
        gamma_prime=(((1, 0), 1), ((0, 1), 1), ((1, 1), 1)),
        base_periods=_a1a2_periods(), theta0=0.0,
        coord_formulas=(
            CoordinateFormula((P(2, 3), P(1, 5)), (P(1, 2), P(3, 5))),
            CoordinateFormula((P(1, 2), P(3, 4), P(3, 5)), (P(2, 3), P(4, 5), P(1, 3))),
        ),
    )
    cat["A1A3"] = Theory(
        name="A1A3", N=2, d=4, param_names=(), basepoint={},
        family=_a1a3_family,
        intersection=np.array([[0, 1, 1], [-1, 0, 0], [-1, 0, 0]]),
        gamma_prime=(((1, 0, 0), 1), ((0, 1, 0), 1), ((0, 0, 1), 1),
                     ((1, 0, -1), 1), ((1, -1, 0), 1), ((1, -1, -1), 1)),
        base_periods=_a1a3_periods(), theta0=0.4,
        coord_formulas=(
            CoordinateFormula((P(1, 3), P(4, 6)), (P(1, 6), P(3, 4))),
            CoordinateFormula((P(2, 3), P(1, 4)), (P(1, 2), P(3, 4))),
            CoordinateFormula((P(1, 4), P(5, 6)), (P(4, 5), P(1, 6))),
        ),
    )
    cat["A2A1"] = Theory(
        name="A2A1", N=3, d=2, param_names=("c",), basepoint={"c": 0},
        family=_a2a1_family,
        intersection=np.array([[0, 1], [-1, 0]]),
        gamma_prime=(((1, 0), 1), ((0, 1), 1), ((1, 1), 1)),
        base_periods=_a2a1_periods(), theta0=0.0,
        coord_formulas=(
            CoordinateFormula((P(2, 3, 4), P(1, 4, 5)), (P(1, 2, 4), P(3, 4, 5))),
            CoordinateFormula((P(1, 2, 5), P(1, 2, 4), P(3, 4, 5)),
                              (P(2, 4, 5), P(1, 2, 3), P(1, 4, 5))),
        ),
        sector_perm=(2, 1, 0, 4, 3),
    )
    from .periods import a2a2_base_periods

    a2a2 = np.zeros((4, 4), dtype=int)
    a2a2[0, 1], a2a2[1, 0] = 1, -1
    cat["A2A2"] = Theory(
        name="A2A2", N=3, d=3, param_names=(), basepoint={},
        family=_a2a2_family, intersection=a2a2,
        gamma_prime=tuple((c, 1) for c in [
            (1, 0, 0, 0), (0, 1, 0, 0), (1, 1, 0, 0), (0, 1, 1, 0),
            (0, 1, 1, 1), (1, 0, -1, 0), (1, 0, -1, -1), (1, -1, -1, 0),
            (1, -1, -1, -1), (1, -1, -2, -1), (1, -2, -2, -1), (2, -1, -2, -1)]),
        base_periods=a2a2_base_periods(), theta0=0.0,
        coord_formulas=(
            CoordinateFormula((Q(1, 2, 3, 4, 5, 6),), (P(1, 2, 3), P(4, 5, 6))),
            CoordinateFormula((P(1, 2, 5), P(3, 5, 6), P(4, 5, 6)),
                              (P(1, 5, 6), P(2, 5, 6), P(3, 4, 5))),
            CoordinateFormula((P(1, 2, 6), P(3, 4, 5)), (P(1, 2, 3), P(4, 5, 6))),
            CoordinateFormula((P(1, 5, 6), P(2, 3, 4)), (P(1, 2, 6), P(3, 4, 5))),
        ),
    )
    return cat


_CATALOG = None


def get_theory(name):
    """Return the catalog entry for ``name`` (A1A2, A1A3, A2A1 or A2A2)."""
    global _CATALOG
    if _CATALOG is None:
        _CATALOG = _build()
    try:
        return _CATALOG[name]
    except KeyError:
        raise UnknownTheoryError(f"unknown theory {name!r}; expected one of "
                                 f"{sorted(_CATALOG)}") from None


THEORY_NAMES = ("A1A2", "A1A3", "A2A1", "A2A2")


def build_differentials(theory, params=None):
    """Differentials of ``theory`` at the family parameters ``params``.

    Missing parameters default to the basepoint; unknown names are rejected.
    """
    params = dict(params or {})
    extra = set(params) - set(theory.param_names)
    if extra:
        raise ValueError(f"{theory.name} has no parameters {sorted(extra)}")
    full = dict(theory.basepoint)
    full.update(params)
    w = theory.family(**full)
    return validate_degrees(w)


def scale_differentials(w, t):
    """Return t.w = (t^2 P_2, t^3 P_3, ...)."""
    if t == 0:
        raise ValueError("zero scale")
    return DifferentialTuple(w.N, {k: p * (t ** k) for k, p in w.phi.items()})


@dataclass(frozen=True)
class AffineMap:
    """z = a*x + b."""

    a: float
    b: complex

    def __call__(self, x):
        return self.a * x + self.b

    def inverse(self, z):
        return (z - self.b) / self.a


def pullback(w, f):
    """Pull back w along z = f(x) = a x + b: P_k(x) -> a^k P_k(a x + b)."""
    lin = Polynomial([f.b, f.a])
    out = {}
    for k, p in w.phi.items():
        out[k] = poly((p(lin) * f.a ** k).coef)
    return DifferentialTuple(w.N, out)


def normalize_quasi_monic_centered(w):
    """Affine pullback making P_N unit-modulus-leading with zero z^{d-1} term.

    Returns ``(w_normalized, f)`` where f(x) = a x + b, a > 0.
    """
    d, N = w.d, w.N
    if d < 1:
        raise DegreeError("P_N must be nonconstant")
    c = w.PN.coef
    b = -c[d - 1] / (d * c[d])
    a = abs(c[d]) ** (-1.0 / (d + N))
    f = AffineMap(float(a), complex(b))
    wn = pullback(w, f)
    # scrub rounding noise in the centered coefficient
    coef = wn.PN.coef.copy()
    if abs(coef[d - 1]) < 1e-14 * max(1.0, np.max(np.abs(coef))):
        coef[d - 1] = 0
    phi = dict(wn.phi)
    phi[N] = poly(coef)
    return DifferentialTuple(N, phi), f


def stokes_ray_directions(w, spectral_param=1.0):
    """Bisectors of the d+N Stokes sectors, reduced to [0, 2pi).

    Sector j (1-based) has its subdominant solution decaying fastest along
    arg z = (pi (2j - 1) - arg A) / (d + N), with A the leading coefficient
    of spectral_param^{-N} P_N.  At the decay direction one WKB exponent
    is real and maximal among the N sheets.

    arg A is taken as arg(lead P_N) - N arg(spectral_param) with principal
    arguments, so the labels move continuously with the phase of the
    spectral parameter.  The list is in label order, which is ascending
    whenever arg A lies in (-pi, pi].
    """
    if spectral_param == 0:
        raise ValueError("zero spectral parameter")
    d, N = w.d, w.N
    argA = np.angle(leading(w.PN)) - N * np.angle(spectral_param)
    j = np.arange(1, d + N + 1)
    th = (np.pi * (2 * j - 1) - argA) / (d + N)
    return np.mod(th, 2 * np.pi)


def labeled_directions(theory, w, spectral_param=1.0):
    """Stokes directions ordered by the theory's sector labels."""
    dirs = stokes_ray_directions(w, spectral_param)
    if theory.sector_perm is not None:
        dirs = dirs[list(theory.sector_perm)]
    return dirs


def max_root_modulus(w):
    r0 = 0.0
    for k in w.nonzero_ks():
        rts = roots(w.P(k))
        if len(rts):
            r0 = max(r0, float(np.max(np.abs(rts))))
    return r0


def choose_radius(w, kind="oper", rmax_cap=12.0, suppression=40.0):
    """Integration radius for the direct method.

    Opers: max(8, 8 r0) with r0 the largest root modulus.  Hitchin section:
    the smallest r with 2 |a|^(1/N) int_{r0}^{r} rho^(d/N) drho >= suppression
    (a the leading coefficient), at least r0 + 2 and at most ``rmax_cap``.
    Small radii keep the grid fine; the suppression bound keeps the
    subdominant solutions and the Dirichlet data accurate.
    """
    if w.d < 1:
        raise DegreeError("P_N must be nonconstant")
    r0 = max_root_modulus(w)
    if kind == "oper":
        return max(8.0, 8.0 * r0)
    if kind == "hitchin":
        N, d = w.N, w.d
        e = (d + N) / N
        a = abs(leading(w.PN)) ** (1 / N)
        r = (suppression * e / (2 * a) + r0 ** e) ** (1 / e)
        return float(min(max(r, r0 + 2.0), rmax_cap))
    raise ValueError(kind)


def higgs_matrix(w, z):
    """Companion-form Higgs field phi_w at the points z, shape z.shape + (N, N)."""
    z = np.asarray(z, dtype=complex)
    N = w.N
    out = np.zeros(z.shape + (N, N), dtype=complex)
    if N == 2:
        out[..., 0, 1] = -w.P(2)(z)
        out[..., 1, 0] = 1
    elif N == 3:
        p2 = w.P(2)(z)
        out[..., 0, 1] = -p2 / 2
        out[..., 0, 2] = -w.P(3)(z)
        out[..., 1, 0] = 1
        out[..., 1, 2] = -p2 / 2
        out[..., 2, 1] = 1
    else:
        raise ValueError("rank must be 2 or 3")
    return out


def catalog_dict():
    """JSON-ready dump of the catalog."""
    out = {}
    for name in THEORY_NAMES:
        th = get_theory(name)
        w = build_differentials(th)
        out[name] = {
            "N": th.N, "d": th.d, "theta0": th.theta0,
            "params": {k: [complex(v).real, complex(v).imag] for k, v in th.basepoint.items()},
            "differentials": {str(k): [[c.real, c.imag] for c in p.coef] for k, p in w.phi.items()},
            "intersection": th.intersection.tolist(),
            "gamma_prime": [{"charge": list(c), "omega": om} for c, om in th.gamma_prime],
            "base_periods": [[z.real, z.imag] for z in th.base_periods],
            "coordinates": [
                {"numerator": [[t, list(i)] for t, i in f.numerator],
                 "denominator": [[t, list(i)] for t, i in f.denominator],
                 "sign": f.sign}
                for f in th.coord_formulas],
        }
    return out

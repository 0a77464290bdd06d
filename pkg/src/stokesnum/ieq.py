"""Damped fixed-point solver for the coupled integral equations.

Each stored charge gamma carries a function x_gamma(t) sampled on the ray
hbar = -exp(i arg Z_gamma - t) (or zeta for the Hitchin section).  Along
that ray the driving term is real and negative:

    oper:     -|Z_gamma| e^t
    hitchin:  -2 R |Z_gamma| cosh t

and the correction from the other rays is

    (1 / 2 pi i) sum_mu Omega_mu <gamma, mu> int ds L_mu(s) / sinh(t - s - i delta)

with L_mu = log(1 + exp x_mu) and delta = arg Z_gamma - arg Z_mu.  The
kernel already includes the contribution of -mu, whose function is the
same as that of mu.  Only the correction ("instanton part") is iterated.
"""
import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .periods import PeriodVector, base_periods

log = logging.getLogger(__name__)

IEQ_DEFAULTS = {"L": 200.0, "steps": 2 ** 17, "tolerance": 2e-15,
                "damping": 0.3, "method": "fourier", "max_iter": 1000}


class RayCollisionError(ArithmeticError):
    pass


class NonConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class RayGrid:
    """Periodic grid t_k = -L + 2 L k / M, k = 0..M-1."""

    L: float
    steps: int

    def __post_init__(self):
        if self.steps < 2:
            raise ValueError("steps must be at least 2")

    @property
    def h(self):
        return 2 * self.L / self.steps

    @property
    def t(self):
        return -self.L + self.h * np.arange(self.steps)


@dataclass
class RaySolution:
    theory: object = field(repr=False)
    periods: PeriodVector = field(repr=False)
    mode: str
    R: float
    grid: RayGrid
    inst: np.ndarray = field(repr=False)      # (n_charges, M) complex
    iterations_used: int = 0
    converged: bool = False
    last_deltas: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def charges(self):
        return self.theory.charges

    @property
    def Z(self):
        return np.array([c @ self.periods.values for c in self.charges])

    def driving(self):
        return driving_terms(self.Z, self.mode, self.R, self.grid.t)

    @property
    def x(self):
        """Full x_gamma(t) on each stored ray."""
        return self.driving() + self.inst


def driving_terms(Z, mode, R, t):
    a = np.abs(np.asarray(Z))[:, None]
    if mode == "oper":
        return -a * np.exp(t)[None, :] + 0j
    if mode == "hitchin":
        return -2 * R * a * np.cosh(t)[None, :] + 0j
    raise ValueError(f"unknown mode {mode!r}")


def log1pexp(x):
    """log(1 + e^x) for complex x, accurate when e^x underflows or is tiny."""
    x = np.asarray(x)
    with np.errstate(over="ignore", under="ignore"):
        big = x.real > 30
        out = np.log1p(np.exp(np.where(big, 0, x)))
        return np.where(big, x + np.log1p(np.exp(-np.where(big, x, 0))), out)


def simpson_weights(n, h):
    """Composite Simpson weights; an even count ends with one trapezoid panel."""
    w = np.zeros(n)
    m = n if n % 2 == 1 else n - 1
    if m >= 3:
        w[:m:2] = 2.0
        w[1:m:2] = 4.0
        w[0] = w[m - 1] = 1.0
        w[:m] *= h / 3
    if m != n:
        w[m - 1] += h / 2
        w[m] += h / 2
    return w


def coupling(theory):
    """Matrix Omega_mu <gamma, mu> over stored charges."""
    C = theory.charges
    om = theory.omegas
    return np.array([[om[j] * theory.pairing(C[i], C[j]) for j in range(len(C))]
                     for i in range(len(C))])


def _phases(Z):
    ph = np.angle(Z)
    return ph


def _check_collisions(E, Z):
    ph = _phases(Z)
    for i, j in zip(*np.nonzero(E)):
        if abs(Z[i]) == 0 or abs(Z[j]) == 0:
            continue
        d = np.mod(ph[i] - ph[j], np.pi)
        if min(d, np.pi - d) < 1e-12:
            raise RayCollisionError(f"rays of charges {i} and {j} coincide")


class _Convolver:
    """Applies the integral operator to L_mu samples on the common grid."""

    def __init__(self, theory, Z, grid, method):
        self.E = coupling(theory)
        self.Z = Z
        _check_collisions(self.E, Z)
        self.grid = grid
        self.method = method
        self.pairs = [(i, j) for i, j in zip(*np.nonzero(self.E))
                      if abs(Z[i]) > 0 and abs(Z[j]) > 0]
        ph = _phases(Z)
        M, h = grid.steps, grid.h
        self.delta = {(i, j): ph[i] - ph[j] for i, j in self.pairs}
        if method == "fourier":
            m = np.arange(M)
            u = np.where(m < M // 2, m, m - M) * h
            self.kernel_hat = {}
            for i, j in self.pairs:
                with np.errstate(over="ignore"):
                    k = 1.0 / np.sinh(u - 1j * self.delta[i, j])
                k[np.abs(u) > 700] = 0.0
                self.kernel_hat[i, j] = np.fft.fft(k) * (h * self.E[i, j] / (2j * np.pi))
        elif method == "simps":
            self.w = simpson_weights(M, h)
        else:
            raise ValueError(f"unknown method {method!r}")

    def __call__(self, Lmu):
        n, M = Lmu.shape
        out = np.zeros((n, M), dtype=complex)
        if self.method == "fourier":
            Lhat = {j: np.fft.fft(Lmu[j]) for j in {j for _, j in self.pairs}}
            acc = {}
            for i, j in self.pairs:
                acc[i] = acc.get(i, 0) + self.kernel_hat[i, j] * Lhat[j]
            for i, a in acc.items():
                out[i] = np.fft.ifft(a)
            return out
        t = self.grid.t
        block = 512
        for i, j in self.pairs:
            wl = self.w * Lmu[j]
            c = self.E[i, j] / (2j * np.pi)
            for a in range(0, M, block):
                tb = t[a:a + block, None]
                with np.errstate(over="ignore"):
                    K = 1.0 / np.sinh(tb - t[None, :] - 1j * self.delta[i, j])
                out[i, a:a + block] += c * (K @ wl)
        return out


def initial_guess(theory, periods=None, mode="oper", R=1.0, grid=None):
    """Starting point: x equals its driving term on every ray."""
    if mode == "hitchin" and not R > 0:
        raise ValueError("R must be positive")
    periods = periods or base_periods(theory)
    grid = grid or RayGrid(IEQ_DEFAULTS["L"], IEQ_DEFAULTS["steps"])
    n = len(theory.charges)
    return RaySolution(theory, periods, mode, float(R), grid,
                       np.zeros((n, grid.steps), dtype=complex))


def apply_F(sol, method="fourier", _conv=None):
    """F(x) on every sample of every stored ray (full x, driving included)."""
    conv = _conv or _Convolver(sol.theory, sol.Z, sol.grid, method)
    drive = sol.driving()
    return drive + conv(log1pexp(drive + sol.inst))


def solve_fixed_point(theory, periods=None, mode="oper", R=1.0, grid=None,
                      damping=0.3, tolerance=2e-15, max_iter=1000,
                      method="fourier", strict=False):
    """Iterate x <- (1 - p) F(x) + p x until 5 consecutive small changes.

    Returns the last iterate; ``converged`` is False if ``max_iter`` was
    reached (or, with ``strict``, NonConvergenceError is raised).
    """
    if not 0 <= damping < 1:
        raise ValueError("damping must lie in [0, 1)")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    t0 = time.time()
    sol = initial_guess(theory, periods, mode, R, grid)
    conv = _Convolver(theory, sol.Z, sol.grid, method)
    drive = sol.driving()
    inst = sol.inst
    deltas = []
    streak = 0
    it = 0
    for it in range(1, max_iter + 1):
        new = (1 - damping) * conv(log1pexp(drive + inst)) + damping * inst
        delta = float(np.max(np.abs(new - inst))) if new.size else 0.0
        inst = new
        deltas.append(delta)
        streak = streak + 1 if delta < tolerance else 0
        if streak >= 5:
            break
    sol.inst = inst
    sol.iterations_used = it
    sol.converged = streak >= 5
    sol.last_deltas = deltas[-5:]
    sol.elapsed = time.time() - t0
    log.info("IEQ %s %s R=%g: %d iterations, converged=%s, %.2f s", theory.name,
             mode, R, it, sol.converged, sol.elapsed)
    if strict and not sol.converged:
        raise NonConvergenceError(f"no convergence after {max_iter} iterations; "
                                  f"last deltas {sol.last_deltas}")
    return sol


def residual(sol, method="fourier"):
    """sup |F(x) - x| over all rays."""
    return float(np.max(np.abs(apply_F(sol, method) - sol.x)))


def evaluate_at(sol, charge, spectral_param):
    """log X_gamma at hbar (oper) or zeta (hitchin), paper convention.

    The ray data enter through one Simpson-rule quadrature of the integral
    equation with the pair-summed kernel 4 / (r - 1/r), r = xi / spectral_param.
    """
    if spectral_param == 0:
        raise ValueError("zero spectral parameter")
    charge = np.asarray(charge)
    th = sol.theory
    Zg = complex(charge @ sol.periods.values)
    if sol.mode == "oper":
        x = Zg / spectral_param
    else:
        x = sol.R * (Zg / spectral_param + spectral_param * np.conj(Zg))
    t = sol.grid.t
    w = simpson_weights(sol.grid.steps, sol.grid.h)
    Zs = sol.Z
    lsp = np.log(complex(spectral_param))
    xs = sol.x
    for j, mu in enumerate(sol.charges):
        e = th.omegas[j] * th.pairing(charge, mu)
        if e == 0 or abs(Zs[j]) == 0:
            continue
        # log r = log xi - log spectral_param, xi = -exp(i arg Z_mu - t)
        logr = 1j * (np.angle(Zs[j]) + np.pi) - t - lsp
        with np.errstate(over="ignore", under="ignore"):
            r = np.exp(logr)
            den = r - 1 / r
        if np.any(np.abs(den) < 1e-12 * np.abs(r + 1 / r)):
            raise RayCollisionError("spectral parameter lies on a coupled ray")
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            kern = np.where(np.isfinite(den), 4 / den, 0)
        x += e / (4j * np.pi) * np.sum(w * log1pexp(xs[j]) * kern)
    return complex(x)


def in_gamma_prime(theory, charge):
    charge = tuple(int(c) for c in charge)
    neg = tuple(-c for c in charge)
    stored = {tuple(c) for c, _ in theory.gamma_prime}
    return charge in stored or neg in stored


def code_sign(theory, charge):
    """Sign relating the code convention to the paper convention.

    -1 on +-Gamma'.  Elsewhere the refinement is not pinned down and +1 is
    used.
    """
    return -1 if in_gamma_prime(theory, charge) else 1


def cluster_at(sol, spectral_param=1.0, sign_convention="paper"):
    out = []
    for i in range(sol.theory.lattice_rank):
        g = sol.theory.basis(i)
        X = np.exp(evaluate_at(sol, g, spectral_param))
        if sign_convention == "code":
            X = code_sign(sol.theory, g) * X
        elif sign_convention != "paper":
            raise ValueError(sign_convention)
        out.append(X)
    return np.array(out)


def cluster_at_unit(sol, sign_convention="code"):
    """X_i of the basis charges at hbar = 1 or zeta = 1 as real numbers when real."""
    X = cluster_at(sol, 1.0, sign_convention)
    if np.all(np.abs(X.imag) <= 1e-12 * np.abs(X)):
        return X.real
    return X


def asymptotic_approx(charge, periods, mode, spectral_param, R=1.0):
    """WKB (oper) or semiflat (hitchin) approximation to X_gamma."""
    if spectral_param == 0:
        raise ValueError("zero spectral parameter")
    Z = complex(np.asarray(charge) @ np.asarray(getattr(periods, "values", periods)))
    if mode == "oper":
        return np.exp(Z / spectral_param)
    return np.exp(R * Z / spectral_param + R * spectral_param * np.conj(Z))


def x_inst_at(sol, charge, spectral_param):
    """Correction part x - (driving value) at a spectral parameter."""
    Z = complex(np.asarray(charge) @ sol.periods.values)
    if sol.mode == "oper":
        base = Z / spectral_param
    else:
        base = sol.R * (Z / spectral_param + spectral_param * np.conj(Z))
    return evaluate_at(sol, charge, spectral_param) - base


# ------------------------------------------------------------ snapshots

def save_snapshot(sol, path):
    """Write ray data to ``path`` (.npz) with JSON metadata inside."""
    meta = {"theory": sol.theory.name, "mode": sol.mode, "R": sol.R,
            "L": sol.grid.L, "steps": sol.grid.steps,
            "periods": [[z.real, z.imag] for z in sol.periods.values],
            "params": {k: [complex(v).real, complex(v).imag] for k, v in sol.periods.params.items()},
            "iterations_used": sol.iterations_used, "converged": sol.converged,
            "last_deltas": sol.last_deltas}
    np.savez(path, inst=sol.inst, meta=json.dumps(meta))


def load_snapshot(path):
    from .catalog import get_theory

    with np.load(path) as f:
        meta = json.loads(str(f["meta"]))
        inst = f["inst"]
    th = get_theory(meta["theory"])
    pv = PeriodVector(np.array([complex(a, b) for a, b in meta["periods"]]),
                      {k: complex(a, b) for k, (a, b) in meta["params"].items()})
    return RaySolution(th, pv, meta["mode"], meta["R"], RayGrid(meta["L"], meta["steps"]),
                       inst, meta["iterations_used"], meta["converged"], meta["last_deltas"])

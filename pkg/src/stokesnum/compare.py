"""Sweeps comparing the direct (DE) and integral-equation (IEQ) pipelines."""
import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import catalog as cat
from . import hitchin_de as hd
from . import ieq
from . import metric as met
from . import oper_de as od
from . import periods as per

log = logging.getLogger(__name__)

CONFIG_KEYS = ("ode_thresh", "ode_rstep", "pde_nmesh", "pde_thresh", "L", "steps",
               "tolerance", "damping", "eps", "method")
SPLIT = 0.1


class ConfigError(ValueError):
    pass


def reldiff(a, b):
    """2|a - b| / (|a| + |b|)."""
    den = abs(a) + abs(b)
    if den == 0:
        raise ZeroDivisionError("reldiff of two zeros")
    return 2 * abs(a - b) / den


# ------------------------------------------------------------------ config

def split_solver_params(cfg, default_pde_method="fourier"):
    """Route flat or sectioned solver keys to (ode, pde, ieq, metric) dicts.

    A flat ``method`` is a PDE backend if it names one ('euler'), an IEQ
    integrator if it names one ('simps'), and for the shared name 'fourier'
    it applies to both.  Sections ``ode``, ``pde``, ``ieq``, ``metric``
    override the flat keys.
    """
    cfg = dict(cfg or {})
    unknown = [k for k in cfg if k not in CONFIG_KEYS + ("ode", "pde", "ieq", "metric", "rmax")]
    if unknown:
        raise ConfigError(f"unknown solver keys: {unknown}")
    ode = {k: cfg[k] for k in ("ode_thresh", "ode_rstep") if k in cfg}
    pde = {k: cfg[k] for k in ("pde_nmesh", "pde_thresh") if k in cfg}
    iq = {k: cfg[k] for k in ("L", "steps", "tolerance", "damping") if k in cfg}
    mt = {k: cfg[k] for k in ("eps", "rmax") if k in cfg}
    m = cfg.get("method")
    if m is not None:
        if m not in ("euler", "fourier", "simps"):
            raise ConfigError(f"unknown method {m!r}")
        if m in ("euler", "fourier"):
            pde["method"] = m
        if m in ("simps", "fourier"):
            iq["method"] = m
    ode.update(cfg.get("ode", {}))
    pde.update(cfg.get("pde", {}))
    iq.update(cfg.get("ieq", {}))
    mt.update(cfg.get("metric", {}))
    if "steps" in iq:
        iq["steps"] = int(iq["steps"])
    return ode, pde, iq, mt


def ieq_params(iq):
    p = dict(ieq.IEQ_DEFAULTS)
    p.update(iq)
    return p


def ieq_solve(theory, pv, mode, R, iq):
    p = ieq_params(iq)
    return ieq.solve_fixed_point(theory, pv, mode, R, ieq.RayGrid(p["L"], p["steps"]),
                                 p["damping"], p["tolerance"], p["max_iter"], p["method"])


def schedule(small=(1e-3, SPLIT, 5), large=(SPLIT, 2.0, 5)):
    """Log-spaced values below the split and linear ones above it."""
    a = np.geomspace(small[0], small[1], int(small[2]), endpoint=False) if small else []
    b = np.linspace(*large[:2], int(large[2])) if large else []
    return sorted(set(float(x) for x in np.concatenate([a, b])))


@dataclass
class RunConfig:
    theory: str
    mode: str = "oper"
    params: dict = field(default_factory=dict)
    theta: float = 0.0
    values: list = field(default_factory=list)
    solver: dict = field(default_factory=dict)
    ladder: list = None
    workers: int = 1

    def __post_init__(self):
        if self.mode not in ("oper", "hitchin", "metric"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        cat.get_theory(self.theory)
        v = list(self.values)
        if not v:
            raise ConfigError("empty schedule")
        if any(x <= 0 for x in v) or any(b <= a for a, b in zip(v, v[1:])):
            raise ConfigError("schedule values must be positive and strictly increasing")
        if self.ladder is not None and len(self.ladder) != 3:
            raise ConfigError("ladder needs three grid sizes")
        split_solver_params(self.solver)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "schedule" in d:
            s = d.pop("schedule")
            d["values"] = schedule(s.get("small"), s.get("large"))
        return cls(**d)


@dataclass
class ComparisonRecord:
    param: float
    X_DE: list = None
    X_IEQ: list = None
    reldiff: list = None
    de_error: list = None
    richardson_p: list = None
    asymptotic: list = None
    error: str = None


# ------------------------------------------------------------------ sweeps

def _point(cfg, value, sol_cache):
    th = cat.get_theory(cfg.theory)
    ode, pde, iq, _ = split_solver_params(cfg.solver)
    rec = ComparisonRecord(float(value))
    phase = np.exp(1j * cfg.theta)
    pv = per.periods_at(th, cfg.params)
    if cfg.mode == "oper":
        hbar = phase / value
        try:
            sol = sol_cache.get("oper") or ieq_solve(th, pv, "oper", 1.0, iq)
            sol_cache["oper"] = sol
            rec.X_IEQ = list(ieq.cluster_at(sol, hbar, "paper"))
        except Exception as e:  # keep going on per-point failures
            rec.error = f"IEQ: {e}"
        rec.asymptotic = [complex(ieq.asymptotic_approx(th.basis(i), pv, "oper", hbar))
                          for i in range(len(pv.values))]
        try:
            X, err, _ = od.oper_coords_DE(th, cfg.params, hbar, ode, with_error=True)
            rec.X_DE, rec.de_error = list(X), [float(e) for e in err]
        except Exception as e:
            rec.error = (rec.error + "; " if rec.error else "") + f"DE: {e}"
    else:
        R = value
        try:
            sol = ieq_solve(th, pv, "hitchin", R, iq)
            rec.X_IEQ = list(ieq.cluster_at(sol, phase, "paper"))
        except Exception as e:
            rec.error = f"IEQ: {e}"
        rec.asymptotic = [complex(ieq.asymptotic_approx(th.basis(i), pv, "hitchin", phase, R))
                          for i in range(len(pv.values))]
        try:
            if cfg.ladder:
                vals, ests = hd.richardson_ladder(th, cfg.params, R, phase, cfg.ladder, pde, ode)
                rec.X_DE = list(vals[-1])
                rec.de_error = [e[0] for e in ests]
                rec.richardson_p = [e[1] for e in ests]
            else:
                X, err, _ = hd.hitchin_spectral_coords_DE(th, cfg.params, R, phase, pde, ode,
                                                          with_error=True)
                rec.X_DE, rec.de_error = list(X), [float(e) for e in err]
        except Exception as e:
            rec.error = (rec.error + "; " if rec.error else "") + f"DE: {e}"
    if rec.X_DE is not None and rec.X_IEQ is not None:
        rec.reldiff = [reldiff(a, b) for a, b in zip(rec.X_DE, rec.X_IEQ)]
    return rec


def _metric_point(cfg, value):
    _, pde, iq, mt = split_solver_params(cfg.solver)
    rec = met.MetricSample(complex(value))
    rec.g_sf = met.semiflat_metric(value)
    p = dict(met.METRIC_DEFAULTS)
    p.update(pde)
    p.update(mt)
    try:
        rec.g_DE, rec.diagnostics = met.direct_metric(value, p["rmax"], p["pde_nmesh"],
                                                      p["pde_thresh"], p["method"])
    except Exception as e:
        rec.diagnostics["error"] = f"DE: {e}"
    try:
        q = {"tolerance": 1e-15}
        q.update(iq)
        rec.g_IEQ = met.ieq_metric(value, p["eps"], q)
    except Exception as e:
        rec.diagnostics["error_ieq"] = f"IEQ: {e}"
    return rec


def _run_one(args):
    cfg, value = args
    if cfg.mode == "metric":
        return _metric_point(cfg, value)
    return _point(cfg, value, {})


def run_sweep(cfg):
    """Run every point of the schedule; results come back in schedule order."""
    if isinstance(cfg, dict):
        cfg = RunConfig.from_dict(cfg)
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as ex:
            return list(ex.map(_run_one, [(cfg, v) for v in cfg.values]))
    if cfg.mode == "metric":
        return [_metric_point(cfg, v) for v in cfg.values]
    cache = {}
    return [_point(cfg, v, cache) for v in cfg.values]


# --------------------------------------------------------- conformal limit

def conformal_limit_check(theory="A1A2", params=None, hbar_points=(1.0,), R_ladder=None,
                          charge_index=0, iq=None):
    """Compare x^inst(R, zeta = hbar R) with the oper x^inst(hbar) as R -> 0.

    hbar values are moduli along the ray hbar in R_- Z_gamma.  Returns a
    dict with the table and whether the approach is monotone at the two
    smallest R.
    """
    th = cat.get_theory(theory)
    pv = per.periods_at(th, params or {})
    R_ladder = list(R_ladder if R_ladder is not None else np.exp(-np.arange(20) / 2))
    gam = th.basis(charge_index)
    Z = complex(np.asarray(gam) @ pv.values)
    ray = -np.exp(1j * np.angle(Z))
    oper = ieq_solve(th, pv, "oper", 1.0, iq or {})
    rows = []
    sols = {R: ieq_solve(th, pv, "hitchin", R, iq or {}) for R in R_ladder}
    monotone = True
    for h in hbar_points:
        x_op = float(np.real(ieq.x_inst_at(oper, gam, ray * h)))
        xs = [float(np.real(ieq.x_inst_at(sols[R], gam, ray * h * R))) for R in R_ladder]
        order = np.argsort(R_ladder)
        d_small = [abs(xs[i] - x_op) for i in order[:2]]
        if len(d_small) == 2:
            monotone &= d_small[0] <= d_small[1]
        rows.append({"hbar": h, "x_oper": x_op, "R": [float(r) for r in R_ladder], "x_hitchin": xs})
    plateau = [float(np.real(ieq.x_inst_at(sols[R], gam, ray))) for R in R_ladder]
    return {"theory": theory, "rows": rows, "plateau": plateau,
            "x_star": math.log((math.sqrt(5) - 1) / 2), "monotone": bool(monotone)}


# ------------------------------------------------------------------ output

def _ncoords(records):
    for r in records:
        for v in (r.X_DE, r.X_IEQ, r.asymptotic):
            if v is not None:
                return len(v)
    return 0


def columns(n):
    cols = ["param"]
    for i in range(1, n + 1):
        cols += [f"X{i}_DE_re", f"X{i}_DE_im", f"X{i}_IEQ_re", f"X{i}_IEQ_im",
                 f"reldiff{i}", f"err{i}", f"rich_p{i}", f"asym{i}_re", f"asym{i}_im"]
    return cols + ["error"]


def _row(rec, n):
    def part(lst, i, f):
        return None if lst is None or lst[i] is None else f(lst[i])

    row = [rec.param]
    for i in range(n):
        row += [part(rec.X_DE, i, lambda v: complex(v).real), part(rec.X_DE, i, lambda v: complex(v).imag),
                part(rec.X_IEQ, i, lambda v: complex(v).real), part(rec.X_IEQ, i, lambda v: complex(v).imag),
                part(rec.reldiff, i, float), part(rec.de_error, i, float),
                part(rec.richardson_p, i, float),
                part(rec.asymptotic, i, lambda v: complex(v).real),
                part(rec.asymptotic, i, lambda v: complex(v).imag)]
    return row + [rec.error]


def records_to_csv(records):
    n = _ncoords(records)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns(n))
    for r in records:
        w.writerow(["" if v is None else repr(v) if isinstance(v, float) else v
                    for v in _row(r, n)])
    return buf.getvalue()


def records_from_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    head, body = rows[0], rows[1:]
    n = (len(head) - 2) // 9
    out = []
    for row in body:
        d = dict(zip(head, row))

        def num(k):
            return None if d[k] == "" else float(d[k])

        def cpx(k):
            re, im = num(k + "_re"), num(k + "_im")
            return None if re is None else complex(re, im)

        def lst(vals):
            return None if all(v is None for v in vals) else vals

        out.append(ComparisonRecord(
            float(d["param"]),
            lst([cpx(f"X{i}_DE") for i in range(1, n + 1)]),
            lst([cpx(f"X{i}_IEQ") for i in range(1, n + 1)]),
            lst([num(f"reldiff{i}") for i in range(1, n + 1)]),
            lst([num(f"err{i}") for i in range(1, n + 1)]),
            lst([num(f"rich_p{i}") for i in range(1, n + 1)]),
            lst([cpx(f"asym{i}") for i in range(1, n + 1)]),
            d["error"] or None))
    return out


def _jsonable(x):
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def records_to_json(records):
    return json.dumps([_jsonable(asdict(r)) for r in records], indent=1)


def plot_data(records):
    """Series for the small (< 0.1) and large parameter regions."""
    out = {}
    for name, sel in (("small", lambda p: p < SPLIT), ("large", lambda p: p >= SPLIT)):
        rs = [r for r in records if sel(r.param)]
        out[name] = {"param": [r.param for r in rs],
                     "X_DE": [_jsonable(r.X_DE) for r in rs],
                     "X_IEQ": [_jsonable(r.X_IEQ) for r in rs],
                     "reldiff": [r.reldiff for r in rs],
                     "de_error": [r.de_error for r in rs]}
    return out


def emit_outputs(records, prefix, fmt="csv", plotdata=False):
    """Write records (and optionally plot data) next to ``prefix``; returns the paths."""
    if not records:
        raise ValueError("no records")
    paths = []
    if isinstance(records[0], met.MetricSample):
        text = metric_csv(records) if fmt == "csv" else json.dumps(
            [_jsonable(asdict(r)) for r in records], indent=1)
    else:
        text = records_to_csv(records) if fmt == "csv" else records_to_json(records)
    p = f"{prefix}.{fmt}"
    with open(p, "w") as f:
        f.write(text)
    paths.append(p)
    if plotdata and not isinstance(records[0], met.MetricSample):
        p = f"{prefix}.plot.json"
        with open(p, "w") as f:
            json.dump(plot_data(records), f, indent=1)
        paths.append(p)
    return paths


def metric_csv(samples):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["c_re", "c_im", "g_DE", "g_IEQ", "g_sf", "I_in", "I_out"])
    for s in samples:
        d = s.diagnostics
        w.writerow(["" if v is None else repr(float(v)) for v in
                    (s.c.real, s.c.imag, s.g_DE, s.g_IEQ, s.g_sf, d.get("I_in"), d.get("I_out"))])
    return buf.getvalue()

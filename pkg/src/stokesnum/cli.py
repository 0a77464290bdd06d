"""Command line interface.

Examples
--------
  stokesnum catalog
  stokesnum ieq --theory A1A2 --mode hitchin --R 1 --sign code
  stokesnum oper-de --theory A1A2 --inv-hbar 0.5
  stokesnum hitchin-de --theory A1A2 --R 1 --config run.json
  stokesnum metric --c 0.5 1 2
  stokesnum sweep --config sweep.json --out results/a1a2 --plotdata
  stokesnum conformal-check --kmax 19
"""
import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import catalog as cat
from . import compare as cmp
from . import hitchin_de as hd
from . import ieq
from . import metric as met
from . import oper_de as od
from . import periods as per


def _load_config(path):
    if not path:
        return {}
    return json.loads(Path(path).read_text())


def _params(items):
    out = {}
    for it in items or []:
        k, _, v = it.partition("=")
        if not _:
            raise SystemExit(f"bad --param {it!r}, expected key=value")
        out[k] = complex(v.replace("i", "j")) if ("j" in v or "i" in v) else float(v)
    return out


def _dump(obj):
    print(json.dumps(cmp._jsonable(obj), indent=1))


def cmd_catalog(a):
    d = cat.catalog_dict()
    _dump(d[a.theory] if a.theory else d)


def cmd_ieq(a):
    th = cat.get_theory(a.theory)
    _, _, iq, _ = cmp.split_solver_params(_load_config(a.config))
    pv = per.periods_at(th, _params(a.param))
    t0 = time.perf_counter()
    sol = cmp.ieq_solve(th, pv, a.mode, a.R, iq)
    sp = complex(a.spectral.replace("i", "j"))
    X = ieq.cluster_at(sol, sp, a.sign)
    if a.snapshot:
        ieq.save_snapshot(sol, a.snapshot)
    _dump({"theory": a.theory, "mode": a.mode, "R": a.R, "spectral_param": sp,
           "cluster": [x.real if abs(x.imag) <= 1e-12 * abs(x) else x for x in X],
           "sign_convention": a.sign, "iterations": sol.iterations_used,
           "seconds": time.perf_counter() - t0})


def cmd_oper_de(a):
    th = cat.get_theory(a.theory)
    ode, _, _, _ = cmp.split_solver_params(_load_config(a.config))
    hbar = np.exp(1j * a.theta) / a.inv_hbar
    X, err, fs = od.oper_coords_DE(th, _params(a.param), hbar, ode, a.sign, with_error=True)
    _dump({"theory": a.theory, "hbar": hbar, "X": list(X), "rel_error": list(err),
           "radius": fs.radius})


def cmd_hitchin_de(a):
    th = cat.get_theory(a.theory)
    ode, pde, _, _ = cmp.split_solver_params(_load_config(a.config))
    zeta = np.exp(1j * a.theta)
    t0 = time.perf_counter()
    X, err, fs = hd.hitchin_spectral_coords_DE(th, _params(a.param), a.R, zeta, pde, ode,
                                               a.sign, with_error=True)
    _dump({"theory": a.theory, "R": a.R, "zeta": zeta,
           "cluster": [x.real if abs(x.imag) <= 1e-9 * abs(x) else x for x in X],
           "ode_rel_error": list(err), "pde": {k: v for k, v in fs.pde_info.items()
                                               if k != "history"},
           "seconds": time.perf_counter() - t0})


def cmd_metric(a):
    cfg = _load_config(a.config)
    c = dict(cfg)
    vals = [float(x) for x in a.c]
    rec = cmp.run_sweep(cmp.RunConfig("A1A2", "metric", {}, 0.0, vals, c))
    if a.out:
        for p in cmp.emit_outputs(rec, a.out, a.format):
            print("wrote", p, file=sys.stderr)
    _dump([{"c": r.c, "g_DE": r.g_DE, "g_IEQ": r.g_IEQ, "g_sf": r.g_sf,
            **r.diagnostics} for r in rec])


def cmd_sweep(a):
    cfg = cmp.RunConfig.from_dict(_load_config(a.config))
    rec = cmp.run_sweep(cfg)
    Path(a.out).parent.mkdir(parents=True, exist_ok=True)
    for p in cmp.emit_outputs(rec, a.out, a.format, a.plotdata):
        print("wrote", p)


def cmd_conformal(a):
    _, _, iq, _ = cmp.split_solver_params(_load_config(a.config))
    ladder = np.exp(-np.arange(a.kmin, a.kmax + 1) / 2)
    rep = cmp.conformal_limit_check(a.theory, {}, a.hbar, ladder, iq=iq)
    _dump(rep)


def build_parser():
    ap = argparse.ArgumentParser(prog="stokesnum")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p, sign=True):
        p.add_argument("--theory", default="A1A2", choices=cat.THEORY_NAMES)
        p.add_argument("--param", action="append", help="family parameter key=value")
        p.add_argument("--config", help="JSON file with solver parameters")
        if sign:
            p.add_argument("--sign", default="paper", choices=("paper", "code"))

    p = sub.add_parser("catalog", help="print the theory catalog")
    p.add_argument("--theory", choices=cat.THEORY_NAMES)
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("ieq", help="solve the integral equation")
    common(p)
    p.add_argument("--mode", default="hitchin", choices=("oper", "hitchin"))
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--spectral", default="1", help="hbar or zeta (complex, e.g. 0.5+0.1j)")
    p.add_argument("--snapshot", help="save the ray functions to this .npz")
    p.set_defaults(func=cmd_ieq)

    p = sub.add_parser("oper-de", help="direct method for opers")
    common(p)
    p.add_argument("--inv-hbar", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.0)
    p.set_defaults(func=cmd_oper_de)

    p = sub.add_parser("hitchin-de", help="direct method for the Hitchin section")
    common(p)
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.0)
    p.set_defaults(func=cmd_hitchin_de)

    p = sub.add_parser("metric", help="Hitchin metric g(c) for (A1,A2), Lambda = 0")
    p.add_argument("--c", nargs="+", default=["1"])
    p.add_argument("--config")
    p.add_argument("--out", help="output prefix")
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("sweep", help="DE vs IEQ sweep from a JSON run config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output prefix")
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    p.add_argument("--plotdata", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("conformal-check", help="x^inst(R, zeta = hbar R) against the oper")
    p.add_argument("--theory", default="A1A2", choices=cat.THEORY_NAMES)
    p.add_argument("--hbar", type=float, nargs="+", default=[0.3, 1.0, 3.0])
    p.add_argument("--kmin", type=int, default=0)
    p.add_argument("--kmax", type=int, default=19)
    p.add_argument("--config")
    p.set_defaults(func=cmd_conformal)
    return ap


def main(argv=None):
    a = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if a.verbose else logging.WARNING)
    a.func(a)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

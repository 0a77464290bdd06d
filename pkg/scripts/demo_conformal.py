"""Conformal limit: Hitchin-section data at zeta = hbar R approach the oper as R -> 0.

Also shows the plateau of x^inst at zeta = -e^{i arg Z} near
log((sqrt 5 - 1) / 2).
"""
import numpy as np

from stokesnum import compare as cmp

R = np.exp(-np.arange(0, 20, 3) / 2)
rep = cmp.conformal_limit_check("A1A2", {}, (0.5, 2.0), R)
for row in rep["rows"]:
    print(f"hbar {row['hbar']}: oper x_inst = {row['x_oper']:.8f}")
    for r, x in zip(row["R"], row["x_hitchin"]):
        print(f"   R = {r:.2e}: {x:.8f}  diff {x - row['x_oper']:+.1e}")
print("plateau:", ["%.5f" % x for x in rep["plateau"]], "target", "%.5f" % rep["x_star"])

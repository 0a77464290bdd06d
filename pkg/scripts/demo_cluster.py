"""Spectral coordinates of the (A1,A2) Hitchin section at R = 1, zeta = 1.

The integral equation gives the reference cluster.  The direct method then
solves the self-duality equation on three grids and extrapolates; the
extrapolated value lands on the integral-equation number.

    python scripts/demo_cluster.py            # ladder 127, 255, 511
    python scripts/demo_cluster.py --full     # ladder 255, 511, 1023
"""
import argparse

from stokesnum import catalog as cat
from stokesnum import hitchin_de as hd
from stokesnum import ieq
from stokesnum import pde

ap = argparse.ArgumentParser()
ap.add_argument("--full", action="store_true")
args = ap.parse_args()
ladder = (255, 511, 1023) if args.full else (127, 255, 511)

th = cat.get_theory("A1A2")
print("periods:", th.base_periods)

sol = ieq.solve_fixed_point(th, None, "hitchin", 1.0)
X_ieq = ieq.cluster_at_unit(sol, "code")
print(f"integral equation ({sol.iterations_used} iterations, {sol.elapsed:.1f} s):", X_ieq)

vals, ests = hd.richardson_ladder(th, {}, 1.0, 1.0, ladder, sign_convention="code")
for n, v in zip(ladder, vals):
    print(f"direct method nmesh {n:5d}: X1 = {v[0].real:.12f}  "
          f"diff {v[0].real - X_ieq[0]:+.2e}")
x1 = vals[:, 0].real
est, p, ok = pde.richardson_error(x1, nmesh=ladder)
r = (ladder[2] + 1) / (ladder[1] + 1)
x_star = x1[2] + (x1[2] - x1[1]) / (r ** p - 1)
print(f"Richardson: p = {p:.3f}, extrapolated X1 = {x_star:.12f}, "
      f"diff from integral equation {x_star - X_ieq[0]:+.1e}")
print("X2 on the finest grid:", vals[-1, 1].real)

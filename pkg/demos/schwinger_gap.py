"""Schwinger model at theta = pi: mass gap, scaling ratio and a small VQE.

Run:  python3 demos/schwinger_gap.py
"""

import math

import numpy as np

from qdl.ansatz import HvaSpec
from qdl.ed import crossing_point, default_grid, gap_scan, ground_state, z_profile
from qdl.learn import vqe_scan
from qdl.operators import SchwingerParams

grid = default_grid()
sizes = (10, 12, 14)

gaps = {n: gap_scan(n, grid) for n in sizes}
for n in sizes[:-1]:
    # R_N = N G_N / ((N+2) G_{N+2}) crosses one near the critical mass
    r = n * gaps[n] / ((n + 2) * gaps[n + 2])
    xc, _ = crossing_point(grid, r)
    print(f"N={n:2d}->{n + 2:2d}  crossing at m/g = {xc:.4f}")

# staggered charge pattern on either side of the transition
for m in (-1.0, 1.0):
    _, psi = ground_state(8, m)
    print(f"m/g={m:+.1f}  <Z_j> =", np.round(z_profile(psi), 3))

# VQE with the symmetry-preserving ansatz, warm-started along the mass grid
spec = HvaSpec(4, 4, SchwingerParams(4, 2.0, 0.0, math.pi))
for m, pt in vqe_scan([-1.0, 0.0, 1.0], spec, budget=600, seed=0).items():
    e0, _ = ground_state(4, m)
    print(f"VQE m/g={m:+.1f}  E={pt.energy:.6f}  exact={e0:.6f}")

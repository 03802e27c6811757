"""Energy concentration of a lam = 1 monopole and its exponential Higgs tail.

Run with ``python demos/concentration.py`` (about 10 s).
"""

import numpy as np
from scipy import stats

from ymh import energy as E
from ymh import grid as G
from ymh import measures as M
from ymh import radial as R
from ymh import su2

p = E.EnergyParams(1.0, 1.0)
prof, _ = R.radial_relax(R.initial_profile(45.0, 9000, p), p)
grid = G.Grid.cube(97, 24.0)
cfg = R.hedgehog_to_grid(prof, grid, min_boundary_higgs=0.9)
m = M.measures(cfg, p)

total = m.mass()
for r in (5.0, 10.0, 20.0):
    print(f"share of eps^-1 e in B_{r:<4g} = {m.mass(G.Ball((0, 0, 0), r)) / total:.4f}")

print(M.detect_concentration(m, 10.0).text())

# 1 - |Phi| along the positive x-axis decays like exp(-m r)
x = grid.coords(0)
j = int(np.argmin(np.abs(x)))
ray = (x >= 5) & (x <= 15)
fit = stats.linregress(x[ray], np.log(1 - su2.norm(cfg.Phi[ray, j, j])))
print(f"decay rate {-fit.slope:.3f}, R^2 = {fit.rvalue ** 2:.5f}")

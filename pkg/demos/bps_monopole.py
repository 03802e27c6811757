"""The charge-one BPS monopole: reduced energy, 3-D lift, Bogomolny split and charge.

Run with ``python demos/bps_monopole.py`` (about 5 s).
"""

import numpy as np

from ymh import energy as E
from ymh import grid as G
from ymh import measures as M
from ymh import radial as R

p = E.EnergyParams(epsilon=1.0, lam=0.0)

# Closed-form profile H = r coth r - 1, K = r / sinh r on (0, 20]
prof = R.bps_profile(r_max=20.0, n=4000)
rep = R.radial_energy(prof, p)
print(f"reduced energy / eps      = {rep.normalized:.6f}   (8 pi = {8 * np.pi:.6f})")
print(f"1-D Bogomolny defect      = {R.bogomolny_defect(prof):.2e}")

# Lift to a Dirichlet cube.  |Phi| = 1 - 1/r only slowly reaches the vacuum,
# so the boundary threshold is lowered explicitly.
grid = G.Grid.cube(97, 8.0)
cfg = R.hedgehog_to_grid(prof, grid, min_boundary_higgs=0.5)
split = E.bogomolny_split(cfg, p)
print(f"3-D energy in the cube    = {split.total:.4f}")
print(f"  topological part        = {split.topological:.4f}")
print(f"  defect ||F - *DPhi||^2  = {split.defect:.2e}")

# Degree of Phi/|Phi| on spheres and the volume charge of balls
for r in (2.0, 4.0, 7.5):
    deg = M.charge_degree(cfg, (0, 0, 0), r)
    vol = M.charge_volume(cfg, p, G.Ball((0, 0, 0), r))
    print(f"r = {r:4.1f}: degree = {deg:.4f}, volume charge = {vol:.4f}, 1 - 1/r = {1 - 1 / r:.4f}")

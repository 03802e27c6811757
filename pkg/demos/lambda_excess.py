"""With lam > 0 the minimal charge-one energy lies strictly above 8 pi.

Relaxes the reduced hedgehog functional for a few couplings and prints the
excess over the topological bound.  Run with ``python demos/lambda_excess.py``.
"""

import numpy as np

from ymh import energy as E
from ymh import radial as R

for lam in (0.0, 0.1, 1.0, 10.0):
    p = E.EnergyParams(1.0, lam)
    start = R.bps_profile(20.0, 4000) if lam == 0 else R.initial_profile(20.0, 4000, p)
    prof, trace = R.radial_relax(start, p)
    e = R.radial_energy(prof, p).normalized
    print(f"lam = {lam:5.1f}: {trace.status:9s} after {trace.iterations:3d} steps, "
          f"E/eps = {e:.4f}, excess over 8 pi = {e - 8 * np.pi:+.4f}")

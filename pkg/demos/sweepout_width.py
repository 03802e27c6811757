"""Width of the hedgehog sweepout family scales like eps.

For each eps the energy of 20 sampled members ``H(y)`` is evaluated on a
Dirichlet cube with ``h = eps / 8``; the maximum divided by eps stays nearly
constant.  Run with ``python demos/sweepout_width.py`` (about 30 s).
"""

from ymh import energy as E
from ymh import flow as Fl
from ymh import grid as G

for k in (8, 16, 32):
    eps = 1.0 / k
    n = 16 * k + 1  # h = eps / 8 on [-1, 1]^3
    scan = Fl.width_scan(E.EnergyParams(eps, 1.0), G.Grid.cube(n, 1.0), y_samples=20)
    y = scan.argmax_y
    print(f"eps = 1/{k:<3d} n = {n:4d}: max Y/eps = {scan.omega_hat / eps:.3f} at y = "
          f"({y[0]:+.2f}, {y[1]:+.2f}, {y[2]:+.2f})")

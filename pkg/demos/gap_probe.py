"""Small perturbations of the vacuum on a torus relax back to zero energy.

Each trial perturbs ``(A, Phi) = (0, T3)`` along a random smooth direction
to normalised energy 0.1 and runs the preconditioned descent.  Run with
``python demos/gap_probe.py`` (about 10 s).
"""

from ymh import energy as E
from ymh import flow as Fl
from ymh import grid as G

p = E.EnergyParams(epsilon=1 / 16, lam=1.0)
report = Fl.gap_probe(p, G.Grid.torus(32, 2.0), amplitude=0.1, trials=5, seed=0)
for line in report.csv_rows():
    print(line)
print(f"trivial fraction: {report.trivial_fraction:.2f}")

"""Numerical workbench for the epsilon-scaled SU(2) Yang-Mills-Higgs energy on flat 3-domains.

Modules
-------
su2       su(2) arithmetic on coefficient triples
grid      grids, configurations and discrete operators
energy    energy, first variation, Euler-Lagrange residuals, Bogomolny split
gauge     gauge action, Coulomb projection, reducible flux pair
flow      descent, sweepout family, width scan, gap probe
radial    hedgehog profiles and their lift to the grid
measures  energy/charge measures, degree, concentration, rescaling, Hodge split
io        ``YMH1`` snapshots
config    ``key = value`` run configuration
verify    invariant suite
cli       the ``ymh`` command
"""

from importlib import metadata

try:
    __version__ = metadata.version("artifact")
except metadata.PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

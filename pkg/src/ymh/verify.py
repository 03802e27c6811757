"""Invariant suite behind ``ymh verify``.

Each check returns a :class:`Check` carrying the measured value, the bound it
is compared against and the verdict.  All inputs are seeded, so the suite is
deterministic.
"""

import time
from typing import NamedTuple

import numpy as np

from . import energy as E
from . import flow as Fl
from . import gauge as Q
from . import grid as G
from . import measures as M
from . import radial as R
from . import su2


class Check(NamedTuple):
    name: str
    value: float
    bound: float
    passed: bool
    seconds: float = 0.0

    def csv_row(self):
        return f"{self.name},{self.value!r},{self.bound!r},{int(self.passed)},{self.seconds:.3f}"


CSV_HEADER = "check,value,bound,passed,seconds"


def _at_most(name, value, bound):
    return Check(name, float(value), float(bound), bool(value <= bound))


def _at_least(name, value, bound):
    return Check(name, float(value), float(bound), bool(value >= bound))


# ----------------------------------------------------------------------------
# algebra


def algebra_checks(rng, samples=2000):
    a, b, c = (rng.normal(size=(samples, 3)) for _ in range(3))
    br = su2.bracket
    jacobi = br(a, br(b, c)) + br(b, br(c, a)) + br(c, br(a, b))
    triple = br(a, br(b, c)) - (b * su2.inner(a, c)[:, None] - c * su2.inner(a, b)[:, None])
    lhs = su2.norm2(br(a, b)) + su2.inner(a, b) ** 2
    rhs = su2.norm2(a) * su2.norm2(b)
    return [
        _at_most("algebra.jacobi", np.abs(jacobi).max(), 1e-12),
        _at_most("algebra.triple_product", np.abs(triple).max(), 1e-12),
        _at_most("algebra.norm_identity", np.max(np.abs(lhs - rhs) / np.maximum(rhs, 1e-300)), 1e-12),
    ]


# ----------------------------------------------------------------------------
# adjointness


def random_config(grid, rng, amplitude=0.5, modes=2):
    """Smooth random pair near ``(0, T3)``; on Dirichlet grids it equals the vacuum on the faces."""
    A = np.stack([Q.smooth_field(grid, rng, amplitude, modes) for _ in range(3)], axis=-2)
    Phi = su2.T3 + Q.smooth_field(grid, rng, amplitude, modes)
    return G.Configuration(grid, A, Phi)


def _relative(x, y):
    return abs(x - y) / max(abs(x), abs(y), 1e-300)


def adjointness_defects(cfg, rng):
    """Relative defects of ``<d_A^* F', a> = <F', d_A a>`` and ``<nabla^* nabla Phi, phi> = <nabla Phi, nabla phi>``."""
    g = cfg.grid
    a = np.stack([Q.smooth_field(g, rng, 1.0, 2) for _ in range(3)], axis=-2)
    phi = Q.smooth_field(g, rng, 1.0, 2)
    Ft = np.stack([Q.smooth_field(g, rng, 1.0, 2) for _ in range(3)], axis=-2)
    d1 = _relative(G.pair(G.codiff_F(cfg, Ft), a, g), G.pair(Ft, G.ext_deriv(cfg, a), g))
    lhs = G.pair(G.rough_laplacian_phi(cfg), phi, g)
    rhs = G.pair(cfg.DPhi, G._cov_deriv(g, cfg.A, phi), g)
    return d1, _relative(lhs, rhs)


def adjointness_checks(rng):
    grids = {
        "periodic": G.Grid.torus(12, 1.0),
        "twisted": G.Grid.torus(12, 1.0, twist_n=1),
        "dirichlet": G.Grid.cube(13, 1.0),
    }
    out = []
    for label, grid in grids.items():
        d1, d2 = adjointness_defects(random_config(grid, rng), rng)
        out.append(_at_most(f"adjoint.dA.{label}", d1, 1e-10))
        out.append(_at_most(f"adjoint.nabla.{label}", d2, 1e-10))
    return out


# ----------------------------------------------------------------------------
# gauge covariance under refinement


def analytic_pair(grid, amplitude=0.3):
    """Fixed smooth pair and gauge on the unit torus, sampled on ``grid``."""
    x, y, z = np.moveaxis(grid.positions, -1, 0)
    tp = 2 * np.pi
    a = amplitude
    A = grid.zeros_A()
    A[..., 0, 1] = a * np.sin(tp * y)
    A[..., 1, 2] = a * np.cos(tp * z)
    A[..., 2, 0] = a * np.sin(tp * (x + y))
    Phi = np.stack([a * np.cos(tp * x), a * np.sin(tp * z), 1 + a * np.cos(tp * y)], axis=-1)
    chi = np.stack([a * np.sin(tp * x), a * np.cos(tp * (y - z)), a * np.sin(tp * z)], axis=-1)
    return G.Configuration.adopt(grid, A, Phi), Q.exp_su2(chi)


def covariance_defects(n, p):
    """``(field defect, energy defect)`` of the analytic pair on an ``n^3`` unit torus.

    The field defect is the L2 norm of ``F(g.c) - g F(c) g^-1`` together with
    the same quantity for ``nabla Phi``; the energy defect is
    ``|E(g.c) - E(c)|``.
    """
    grid = G.Grid.torus(n)
    cfg, g = analytic_pair(grid)
    moved = Q.apply_gauge(cfg, g)
    dF = moved.F - Q.adjoint(g, cfg.F)
    dD = moved.DPhi - Q.adjoint(g, cfg.DPhi)
    field = np.sqrt(G.pair(dF, dF, grid) + G.pair(dD, dD, grid))
    return field, abs(E.energy(moved, p) - E.energy(cfg, p))


def covariance_checks(ns=(16, 32, 64, 128)):
    """Observed orders of the covariance defects.

    The field defect is checked over every dyadic refinement.  The energy
    defect is a difference of two O(h^2) errors that partially cancel on
    coarse grids, so its order is the least-squares slope over the three
    finest grids.
    """
    p = E.EnergyParams(1.0, 1.0)
    vals = np.array([covariance_defects(n, p) for n in ns])
    orders = np.log2(vals[:-1, 0] / vals[1:, 0])
    h = 1.0 / np.asarray(ns, dtype=float)
    slope = np.polyfit(np.log(h[-3:]), np.log(vals[-3:, 1]), 1)[0]
    return [_at_least("gauge.field_order.min", orders.min(), 1.8),
            _at_least("gauge.energy_order", slope, 1.8)]


# ----------------------------------------------------------------------------
# maximum principle, measure bound, Hodge


def max_principle_check(seed=0):
    """Relax a perturbed vacuum that starts with ``|Phi| > 1`` somewhere."""
    p = E.EnergyParams(1.0 / 8, 1.0)
    grid = G.Grid.torus(32)
    base = G.Configuration.trivial(grid)
    a, phi = Fl._random_direction(grid, np.random.default_rng(seed))
    start = base.perturbed(a, phi, Fl.scale_to_energy(base, a, phi, p, 0.5))
    final, trace = Fl.relax(start, p, Fl.FlowParams(1.0, 1e-8, 500))
    excess = float(su2.norm(final.Phi).max() - 1.0)
    return [_at_least("max_principle.start_exceeds_one", su2.norm(start.Phi).max() - 1.0, 0.0),
            Check("max_principle.converged", float(trace.final_residual), 1e-8, trace.converged),
            _at_most("max_principle.excess", excess, 1e-6)]


def schwarz_violations(m, rtol=1e-12):
    """Sites where ``|kappa| > mu``, allowing ``rtol`` of relative rounding slack."""
    return int(np.count_nonzero(np.abs(m.kappa) > m.mu * (1 + rtol) + 1e-300))


def measure_bound_checks(rng):
    cases = []
    p = E.EnergyParams(0.2, 1.0)
    cases.append(("random", random_config(G.Grid.torus(16), rng, 1.0), p))
    cases.append(("reducible", Q.reducible_pair(G.Grid.torus(16, twist_n=1)), p))
    bps = R.hedgehog_to_grid(R.bps_profile(20.0, 4000), G.Grid.cube(33, 4.0), min_boundary_higgs=0.5)
    cases.append(("bps", bps, E.EnergyParams(1.0, 0.0)))
    return [_at_most(f"measure_bound.{label}", schwarz_violations(M.measures(cfg, q)), 0)
            for label, cfg, q in cases]


def hodge_checks(rng):
    grid = G.Grid.torus(16)
    omega = np.stack([Q.smooth_field(grid, rng, 1.0, 3)[..., 0] for _ in range(3)], axis=-1)
    omega += rng.normal(size=3)
    s = M.hodge_split(omega, grid)
    parts = [np.broadcast_to(s.h, omega.shape), s.df, s.dstar_alpha]
    scale = G.pair(omega, omega, grid)
    ortho = max(abs(G.pair(parts[i], parts[j], grid))
                for i, j in ((0, 1), (0, 2), (1, 2))) / scale
    resid = s.reconstruct() - omega
    recon = np.sqrt(G.pair(resid, resid, grid) / scale)
    pyth = abs(sum(G.pair(x, x, grid) for x in parts) - scale) / scale
    return [_at_most("hodge.orthogonality", ortho, 1e-10),
            _at_most("hodge.reconstruction", recon, 1e-10),
            _at_most("hodge.pythagoras", pyth, 1e-10)]


# ----------------------------------------------------------------------------


def run_suite(seed=0):
    """Run every check group; returns the list of :class:`Check` results."""
    rng = np.random.default_rng(seed)
    groups = [
        lambda: algebra_checks(rng),
        lambda: adjointness_checks(rng),
        covariance_checks,
        lambda: max_principle_check(seed),
        lambda: measure_bound_checks(rng),
        lambda: hodge_checks(rng),
    ]
    results = []
    for fn in groups:
        t0 = time.perf_counter()
        chunk = fn()
        dt = (time.perf_counter() - t0) / len(chunk)
        results.extend(c._replace(seconds=dt) for c in chunk)
    return results

"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every test prints one ``criterion N PASS|FAIL`` line (collected again in the
terminal summary) and asserts the same verdict.  Runtimes are wall-clock on
the machine running the suite and are part of each verdict.
"""

import csv
import time

import numpy as np
from scipy import stats

from ymh import cli
from ymh import energy as E
from ymh import flow as Fl
from ymh import gauge as Q
from ymh import grid as G
from ymh import measures as M
from ymh import radial as R
from ymh import su2
from ymh import verify as V

EIGHT_PI = 8 * np.pi
BPS = E.EnergyParams(1.0, 0.0)
LAM1 = E.EnergyParams(1.0, 1.0)

# the cube [-L, L]^3 with L = 1 hosts the width scan, the torus of side 2L the gap probe
L = 1.0


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def _verdict(acceptance, number, title, ok, timer, limit, detail):
    within = timer.seconds < limit
    passed = bool(ok and within)
    acceptance(number, title, passed, f"{detail}; {timer.seconds:.1f} s (limit {limit} s)")
    assert ok, detail
    assert within, f"runtime {timer.seconds:.1f} s exceeds {limit} s"


def test_01_bps_energy(acceptance, tmp_path):
    with Timer() as tm:
        status = cli.main(["bps", "--out", str(tmp_path), "--set", "r_max = 20", "--set", "radial_n = 4000",
                           "--set", "epsilon = 1", "--set", "lambda = 0"])
        with open(tmp_path / "bps.csv", newline="") as fh:
            (row,) = csv.DictReader(fh)
    e = float(row["normalized"])
    rel = abs(e / EIGHT_PI - 1)
    _verdict(acceptance, 1, "BPS energy", status == 0 and rel <= 0.01, tm, 1,
             f"eps^-1 Y = {e:.6f}, 8 pi = {EIGHT_PI:.6f}, rel. error {rel:.2e} <= 1e-2")


def test_02_bogomolny_saturation(acceptance):
    with Timer() as tm:
        prof = R.bps_profile(20.0, 4000)
        defect_1d = R.bogomolny_defect(prof) / R.radial_energy(prof, BPS, tail=False).total
        # 96^3 window at h = eps / 8, centred on the monopole
        h = 1.0 / 8
        g = G.Grid((96,) * 3, h, G.DIRICHLET, origin=(-95 * h / 2,) * 3)
        split = E.bogomolny_split(R.hedgehog_to_grid(prof, g, min_boundary_higgs=0.5), BPS)
        defect_3d = split.defect / split.total
    _verdict(acceptance, 2, "Bogomolny saturation", defect_1d < 1e-3 and defect_3d < 1e-2, tm, 60,
             f"defect/total = {defect_1d:.2e} (1-D, < 1e-3), {defect_3d:.2e} (96^3 lift, < 1e-2)")


def test_03_charge(acceptance):
    with Timer() as tm:
        # the volume charge of B_R is 1 - 1/R in the continuum, so R must be large
        radius = 47.5
        prof = R.bps_profile(90.0, 18000)
        g = G.Grid.cube(241, 48.0)
        c = R.hedgehog_to_grid(prof, g, min_boundary_higgs=0.95)
        k_vol = M.charge_volume(c, BPS, G.Ball((0, 0, 0), radius))
        k_deg = M.charge_degree(c, (0, 0, 0), radius, level=4)
    ok = (0.95 <= k_vol <= 1.05 and 0.95 <= k_deg <= 1.05 and abs(k_vol - k_deg) <= 0.03
          and abs(k_deg - 1) <= 0.01)
    _verdict(acceptance, 3, "charge integrality", ok, tm, 30,
             f"R = {radius}, h = 0.4: charge_volume = {k_vol:.4f}, charge_degree (level 4) = {k_deg:.4f}, "
             f"|difference| = {abs(k_vol - k_deg):.4f} <= 0.03")


def test_04_strict_excess(acceptance):
    with Timer() as tm:
        prof, trace = R.radial_relax(R.initial_profile(20.0, 4000, LAM1), LAM1)
        e = R.radial_energy(prof, LAM1).normalized
    ok = trace.converged and trace.final_residual < 1e-6 and e > EIGHT_PI + 0.1
    _verdict(acceptance, 4, "strict lambda > 0 excess", ok, tm, 10,
             f"status {trace.status}, residual {trace.final_residual:.1e}, "
             f"eps^-1 Y - 8 pi = {e - EIGHT_PI:.4f} > 0.1")


def test_05_sweepout_width_scaling(acceptance):
    widths = {}
    with Timer() as tm:
        for k in (16, 32, 64):
            eps = L / k
            n = int(round(2 * L / (eps / 8))) + 1
            scan = Fl.width_scan(E.EnergyParams(eps, 1.0), G.Grid.cube(n, L), y_samples=100)
            widths[k] = scan.omega_hat / eps
    w = np.array(list(widths.values()))
    spread = w.max() / w.min() - 1
    detail = ", ".join(f"eps = L/{k}: {v:.3f}" for k, v in widths.items())
    _verdict(acceptance, 5, "sweepout width scaling", spread <= 0.25, tm, 600,
             f"max_y Y/eps: {detail}; spread {spread:.2%} <= 25%")


def test_06_rescale_exactness(acceptance):
    errors = []
    with Timer() as tm:
        for seed, t in enumerate((2.0, 0.5, 4.0, 0.25, 2.0)):
            rng = np.random.default_rng(seed)
            g = G.Grid.cube(17 + 4 * seed, 1.0)
            c = V.random_config(g, rng, amplitude=0.8)
            p = E.EnergyParams(float(rng.uniform(0.1, 1.0)), float(rng.uniform(0, 2)))
            x = g.coords(0)
            center = tuple(x[np.argmin(np.abs(x - v))] for v in (0.2, -0.1, 0.1))
            r = 0.5
            before = G.integrate(E.energy_density(c, p), g, G.Ball(center, r)) / p.epsilon
            new, q = M.rescale(c, p, center, t)
            after = G.integrate(E.energy_density(new, q), new.grid, G.Ball((0, 0, 0), r / t)) / q.epsilon
            errors.append(abs(after / before - 1))
    worst = max(errors)
    _verdict(acceptance, 6, "scaling exactness", worst <= 1e-12, tm, 10,
             f"t in (2, 1/2, 4, 1/4, 2): max rel. change of normalised ball energy {worst:.1e} <= 1e-12")


def test_07_conservation(acceptance):
    with Timer() as tm:
        g = G.Grid.cube(129, 8.0)
        c = R.hedgehog_to_grid(R.bps_profile(20.0, 4000), g, min_boundary_higgs=0.5)
        rows = M.conservation_check(c, BPS, (0, 0, 0), [2.0, 4.0])
        dens = E.energy_density(c, BPS)
        # for the BPS monopole both sides vanish, so the ball energy sets the scale
        scale = [max(abs(r.lhs), abs(r.rhs), G.integrate(dens, g, G.Ball((0, 0, 0), r.radius)))
                 for r in rows]
    rel = [abs(r.lhs - r.rhs) / s for r, s in zip(rows, scale)]
    detail = "; ".join(f"r = {r.radius:g}: lhs {r.lhs:+.2e}, rhs {r.rhs:+.2e}, |lhs - rhs| / scale {x:.1e}"
                       for r, x in zip(rows, rel))
    _verdict(acceptance, 7, "conservation law", max(rel) <= 0.02, tm, 60, detail + " (<= 2e-2)")


def test_08_reducible_solution(acceptance):
    with Timer() as tm:
        g = G.Grid.torus(16, 1.0, twist_n=1)
        c = Q.reducible_pair(g)
        p = E.EnergyParams(0.25, 1.0)
        res = E.el_residuals(c, p)[2]
        dphi = np.abs(c.DPhi).max()
        unit = np.abs(su2.norm(c.Phi) - 1).max()
        aligned = np.abs(c.F - su2.inner(c.F, c.Phi[..., None, :])[..., None] * c.Phi[..., None, :]).max()
        kappa = np.abs(M.measures(c, p).kappa).max()
    ok = res <= 1e-10 and dphi == 0 and unit == 0 and aligned == 0 and kappa == 0
    _verdict(acceptance, 8, "reducible solution", ok, tm, 5,
             f"EL residual {res:.1e} <= 1e-10, max|nabla Phi| = {dphi}, max||Phi| - 1| = {unit}, "
             f"max|F - <F,Phi>Phi| = {aligned}, max|kappa| = {kappa}")


def test_09_gap_probe(acceptance):
    lam = 1.0
    with Timer() as tm:
        rep = Fl.gap_probe(E.EnergyParams(L / 32, lam), G.Grid.torus(64, 2 * L),
                           0.1 * min(lam, 1.0), 20, seed=0)
    worst = max(t.final_energy for t in rep.trials)
    ok = len(rep.trials) == 20 and all(t.final_energy < 1e-8 for t in rep.trials)
    _verdict(acceptance, 9, "gap probe", ok, tm, 900,
             f"{sum(t.outcome == 'trivial' for t in rep.trials)}/20 trials relax to Y < 1e-8 "
             f"(largest final Y {worst:.2e})")


def test_10_invariant_suite(acceptance):
    with Timer() as tm:
        checks = V.run_suite(0)
    failed = [c.name for c in checks if not c.passed]
    _verdict(acceptance, 10, "invariant suite", not failed, tm, 300,
             f"{len(checks)} checks, {len(failed)} failures" + (f": {', '.join(failed)}" if failed else ""))


def test_11_concentration(acceptance):
    with Timer() as tm:
        eps = 1.0
        prof, _ = R.radial_relax(R.initial_profile(60.0, 12000, LAM1), LAM1)
        # L = 32 eps; h = eps / 3
        g = G.Grid.cube(193, 32.0 * eps)
        c = R.hedgehog_to_grid(prof, g, min_boundary_higgs=0.9)
        m = M.measures(c, LAM1)
        total = m.mass()
        frac = m.mass(G.Ball((0, 0, 0), 20 * eps)) / total
        rep = M.detect_concentration(m, 10 * eps)
        x = g.coords(0)
        j = int(np.argmin(np.abs(x)))
        on = (x >= 5 * eps - 1e-9) & (x <= 15 * eps + 1e-9)
        fit = stats.linregress(x[on], np.log(1 - su2.norm(c.Phi[on, j, j])))
    share = rep.points[0].mass / total if rep.points else 0.0
    ok = frac >= 0.99 and len(rep.points) == 1 and share >= 0.9 and fit.rvalue ** 2 >= 0.98
    _verdict(acceptance, 11, "concentration bookkeeping", ok, tm, 300,
             f"B_20eps share {frac:.5f} >= 0.99, {len(rep.points)} point(s) with mass share {share:.3f} "
             f">= 0.9, exponential fit R^2 = {fit.rvalue ** 2:.5f} >= 0.98")

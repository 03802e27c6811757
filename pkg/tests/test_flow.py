import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles as O
from ymh import energy as E
from ymh import flow as Fl
from ymh import gauge as Q
from ymh import grid as G
from ymh import measures as M
from ymh import su2


# ----------------------------------------------------------------------------
# descent


def test_flow_params_validation():
    for bad in (dict(step0=0), dict(tol_residual=-1), dict(max_iters=-1),
                dict(backtrack=1.0), dict(backtrack=0.0)):
        with pytest.raises(ValueError):
            Fl.FlowParams(**bad)


def test_relax_trivial_pair_takes_no_step():
    c = G.Configuration.trivial(G.Grid.torus(8))
    out, trace = Fl.relax(c, E.EnergyParams(0.2))
    assert trace.iterations == 0 and trace.final_residual == 0 and trace.converged
    assert out is c


def test_relax_reducible_pair_is_already_critical():
    c = Q.reducible_pair(G.Grid.torus(12, 1.0, twist_n=1))
    out, trace = Fl.relax(c, E.EnergyParams(0.25), Fl.FlowParams(tol_residual=1e-9))
    assert trace.iterations == 0 and trace.final_residual <= 1e-10
    assert np.array_equal(out.A, c.A)


def _perturbed(grid, p, target, seed):
    base = G.Configuration.trivial(grid)
    a, phi = Fl._random_direction(grid, np.random.default_rng(seed))
    if not grid.periodic:
        a = a * grid.free_mask[..., None, None]
        phi = phi * grid.free_mask[..., None]
    s = Fl.scale_to_energy(base, a, phi, p, target)
    return base.perturbed(a, phi, s)


@pytest.mark.parametrize("grid", [G.Grid.torus(12, 1.0), G.Grid.cube(13, 0.5)])
def test_relax_is_monotone_and_reports_its_final_residual(grid):
    p = E.EnergyParams(0.25, 1.0)
    start = _perturbed(grid, p, 0.3, seed=4)
    # the Dirichlet cube keeps a nearly flat gauge-like direction, so it gets a looser tolerance
    tol = 1e-7 if grid.periodic else 1e-6
    out, trace = Fl.relax(start, p, Fl.FlowParams(tol_residual=tol, max_iters=400))
    assert trace.converged
    assert trace.monotone()
    assert trace.energies[0] == pytest.approx(E.energy(start, p), rel=1e-14)
    assert abs(E.el_residuals(out, p)[2] - trace.final_residual) <= 1e-12
    assert trace.final_energy == E.energy(out, p)
    if not grid.periodic:
        edge = ~grid.free_mask
        assert np.array_equal(out.A[edge], start.A[edge])
        assert np.array_equal(out.Phi[edge], start.Phi[edge])


def test_relax_without_preconditioner_still_descends():
    g = G.Grid.torus(8, 1.0)
    p = E.EnergyParams(0.5, 1.0)
    start = _perturbed(g, p, 0.2, seed=1)
    _, trace = Fl.relax(start, p, Fl.FlowParams(step0=0.05, max_iters=30), precondition=False)
    assert trace.monotone() and trace.final_energy < 0.5 * trace.energies[0]


def test_relax_zero_budget_returns_input():
    g = G.Grid.torus(8, 1.0)
    p = E.EnergyParams(0.5, 1.0)
    start = _perturbed(g, p, 0.2, seed=2)
    out, trace = Fl.relax(start, p, Fl.FlowParams(max_iters=0))
    assert out is start and trace.status == "max_iters" and trace.iterations == 0
    assert trace.rows()[0][:2] == (0, E.energy(start, p))


def test_relax_energy_floor_stops_early():
    g = G.Grid.torus(8, 1.0)
    p = E.EnergyParams(0.5, 1.0)
    start = _perturbed(g, p, 0.2, seed=4)
    fp = Fl.FlowParams(tol_residual=1e-12, max_iters=200)
    _, full = Fl.relax(start, p, fp)
    floor = 1e-3 * full.energies[0]
    _, short = Fl.relax(start, p, fp, stop_below=floor)
    k = next(i for i, e in enumerate(full.energies) if e < floor)
    assert short.status == "below_floor" and short.energies == full.energies[:k + 1]
    assert full.final_energy < floor


def test_relax_callback_sees_every_iterate():
    g = G.Grid.torus(8, 1.0)
    p = E.EnergyParams(0.5, 1.0)
    seen = []
    _, trace = Fl.relax(_perturbed(g, p, 0.2, seed=3), p, Fl.FlowParams(max_iters=5),
                        callback=lambda it, cfg, e, r: seen.append((it, e, r)))
    assert [s[0] for s in seen] == list(range(len(trace.energies)))
    assert [s[1] for s in seen] == trace.energies


def _compact_laplacian(X, grid, mass):
    """``(m + Delta) X`` with the 7-point stencil; Dirichlet faces treated as zero."""
    h = grid.spacing
    if grid.periodic:
        out = mass * X
        for ax in range(3):
            out = out + (2 * X - np.roll(X, 1, ax) - np.roll(X, -1, ax)) / h ** 2
        return out
    Y = X * grid.free_mask[(...,) + (None,) * (X.ndim - 3)]
    out = mass * Y
    for ax in range(3):
        pad = np.pad(Y, [(1, 1) if k == ax else (0, 0) for k in range(Y.ndim)])
        sl = lambda a, b: tuple(slice(a, b) if k == ax else slice(None) for k in range(Y.ndim))
        out = out + (2 * Y - pad[sl(0, -2)] - pad[sl(2, None)]) / h ** 2
    return out * grid.free_mask[(...,) + (None,) * (X.ndim - 3)]


@pytest.mark.parametrize("grid", [G.Grid((6, 8, 10), 0.3), G.Grid.cube(9, 1.0)])
def test_preconditioner_inverts_the_compact_operator(grid, rng):
    pre = Fl.Preconditioner(grid, 2.5)
    X = rng.normal(size=grid.dims + (3, 3)) * grid.free_mask[..., None, None]
    assert np.allclose(_compact_laplacian(pre(X), grid, 2.5), X, atol=1e-11)
    if not grid.periodic:
        assert np.all(pre(X)[~grid.free_mask] == 0)


@pytest.fixture(scope="module")
def sweepout_relaxation():
    """Descent from the y = 0 member at h = eps / 8, lambda = 1 (about 25 s)."""
    p = E.EnergyParams(0.25, 1.0)
    g = G.Grid.cube(33, 1.0)
    start = Fl.build_sweepout(np.zeros(3), p, g)
    peak = [0.0]

    def watch(it, cfg, e, r):
        peak[0] = max(peak[0], float(su2.norm(cfg.Phi).max()))

    out, trace = Fl.relax(start, p, Fl.FlowParams(tol_residual=1e-6, max_iters=300), callback=watch)
    return p, out, trace, peak[0]


def test_sweepout_descent_keeps_higgs_bounded(sweepout_relaxation):
    p, out, trace, peak = sweepout_relaxation
    assert trace.monotone()
    assert peak <= 1 + 1e-6
    assert trace.final_residual < 1e-3 * trace.residuals[0]
    # stays in the charge one sector, above the Bogomolny bound 8 pi
    assert 8 * np.pi < trace.final_energy / p.epsilon < trace.energies[0] / p.epsilon
    assert M.charge_degree(out, (0, 0, 0), 0.6, level=5) == pytest.approx(1.0, abs=1e-3)
    assert M.degree_solid_angle(out, (0, 0, 0), 0.6) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.xfail(strict=True, reason="the finite-difference energy is gauge invariant only to "
                   "O(h^2); descent drifts along the broken gauge orbit and the residual stalls "
                   "near 5e-3 instead of reaching 1e-6")
def test_sweepout_descent_converges(sweepout_relaxation):
    _, _, trace, _ = sweepout_relaxation
    assert trace.converged and trace.final_residual <= 1e-6


# ----------------------------------------------------------------------------
# sweepout family


def test_rho_matches_reference_cutoff():
    t = np.linspace(0, 2, 4001)
    assert np.allclose(Fl.rho(t), O.rho_quintic(t), atol=1e-15)
    assert Fl.rho(0.5) == 0.5 and Fl.rho(1.0) == 1.0 and Fl.rho(7.0) == 1.0


def test_rho_is_monotone_c2_with_bounded_slope():
    d = 1e-5
    t = np.linspace(d, 1.5, 30001)
    d1 = (Fl.rho(t + d) - Fl.rho(t - d)) / (2 * d)
    # the bridge slope peaks at q'(2/5) = 1.512, well inside the required bound 5
    assert d1.min() >= -1e-9 and d1.max() == pytest.approx(1.512, abs=1e-6)
    # first and second derivatives are continuous at both junctions
    for t0 in (2 / 3, 1.0):
        left = (Fl.rho(t0) - Fl.rho(t0 - d)) / d
        right = (Fl.rho(t0 + d) - Fl.rho(t0)) / d
        assert abs(left - right) < 1e-4
        sec_l = (Fl.rho(t0) - 2 * Fl.rho(t0 - d) + Fl.rho(t0 - 2 * d)) / d ** 2
        sec_r = (Fl.rho(t0 + 2 * d) - 2 * Fl.rho(t0 + d) + Fl.rho(t0)) / d ** 2
        assert abs(sec_l - sec_r) < 1e-2


def test_center_of():
    assert np.allclose(Fl.center_of([0.5, 0, 0]), [-1.0, 0, 0])
    assert np.allclose(Fl.center_of(np.zeros(3)), 0)


def test_boundary_sphere_members_are_constant():
    p = E.EnergyParams(0.125)
    g = G.Grid.cube(9, 1.0)
    y = np.array([0.6, 0.0, 0.8])
    c = Fl.build_sweepout(y, p, g)
    assert np.all(c.A == 0) and np.all(c.Phi == y)
    # |y| = 1 only up to rounding, so the potential is at the 1e-31 level
    assert E.energy(c, p) < 1e-28
    assert Fl.sweepout_energy(y, p, g).total == 0
    with pytest.raises(ValueError):
        Fl.build_sweepout([1.0, 0.5, 0.0], p, g)


def test_center_member_is_a_unit_charge_hedgehog():
    p = E.EnergyParams(0.125)
    g = G.Grid.cube(33, 1.0)
    c = Fl.build_sweepout(np.zeros(3), p, g)
    assert np.all(c.Phi[16, 16, 16] == 0)
    assert M.charge_degree(c, (0, 0, 0), 0.5, level=5) == pytest.approx(1.0, abs=1e-3)
    assert M.degree_solid_angle(c, (0, 0, 0), 0.5) == pytest.approx(1.0, abs=1e-9)


def test_far_center_gives_unit_higgs():
    p = E.EnergyParams(0.125)
    g = G.Grid.cube(17, 1.0)
    y = np.array([-0.9, 0.0, 0.0])        # a(y) = (9, 0, 0)
    c = Fl.build_sweepout(y, p, g)
    assert np.allclose(su2.norm(c.Phi), 1.0, atol=1e-15)
    assert E.total_energy(c, p).potential_term < 1e-28


@given(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6), st.floats(-0.6, 0.6))
def test_sweepout_faces_follow_the_formula(y1, y2, y3):
    y = np.array([y1, y2, y3])
    if np.linalg.norm(y) >= 1:
        return
    p = E.EnergyParams(0.25)
    g = G.Grid.cube(9, 1.0)
    c = Fl.build_sweepout(y, p, g)
    u = (g.positions - Fl.center_of(y)) / p.epsilon
    r = np.linalg.norm(u, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        expect = np.where(r > 0, Fl.rho(r) * u / r, 0.0)
    edge = ~g.free_mask
    assert np.allclose(c.Phi[edge], expect[edge], atol=1e-15)


def test_center_energy_converges_to_the_continuum_value():
    """Richardson extrapolation of the windowed energy matches quadrature plus the analytic tail."""
    p = E.EnergyParams(0.25, 1.0)
    exact = O.sweepout_center_energy(O.rho_quintic, p.epsilon, p.lam, 1.0)
    vals = np.array([Fl.sweepout_energy(np.zeros(3), p, G.Grid.cube(n, 1.0), window=2.0).normalized
                     for n in (65, 129, 257)])
    errs = exact - vals
    assert np.all(errs > 0) and errs[2] < errs[1] / 3.0 < errs[0] / 6.0
    richardson = vals[2] + (vals[2] - vals[1]) / 3
    assert richardson == pytest.approx(exact, rel=2e-3)


@pytest.mark.parametrize("y", [np.zeros(3), np.array([0.1, -0.05, 0.02])])
def test_window_agrees_with_the_whole_grid(y):
    p = E.EnergyParams(0.125, 1.0)
    g = G.Grid.cube(65, 1.0)
    full = Fl.sweepout_energy(y, p, g, window=None)
    part = Fl.sweepout_energy(y, p, g, window=4.0)
    assert part.total == pytest.approx(full.total, rel=3e-4)
    # outside the window only the O(h^2) discrete remainder of nabla Phi is dropped
    assert part.gradient_term == pytest.approx(full.gradient_term, rel=1e-4)
    assert part.potential_term == pytest.approx(full.potential_term, rel=1e-10)


def test_sample_ball():
    pts = Fl.sample_ball(100)
    assert pts.shape == (100, 3) and np.all(pts[0] == 0)
    assert np.all(np.linalg.norm(pts, axis=-1) <= 1)
    assert np.array_equal(pts, Fl.sample_ball(100))
    assert len(np.unique(pts, axis=0)) == 100
    assert Fl.sample_ball(5, include_center=False).shape == (5, 3)
    assert Fl.sample_ball(1).shape == (1, 3)


def test_width_scan_on_boundary_sphere_is_zero():
    p = E.EnergyParams(0.125)
    ys = [[1, 0, 0], [0, -1, 0], [0.6, 0.8, 0]]
    assert Fl.width_scan(p, G.Grid.cube(17, 1.0), ys=ys).omega_hat == 0


def test_width_scan_lambda_band():
    g = G.Grid.cube(65, 1.0)
    eps = 0.125
    omega = {lam: Fl.width_scan(E.EnergyParams(eps, lam), g, y_samples=16).omega_hat / eps
             for lam in (0.25, 1.0, 4.0)}
    # band constants calibrated on lambda = 1
    c, C = 0.9 * omega[1.0], 1.1 * omega[1.0]
    for lam, w in omega.items():
        assert c * min(1.0, lam) <= w <= C * max(1.0, lam)
    assert omega[0.25] < omega[1.0] < omega[4.0]


# ----------------------------------------------------------------------------
# gap probe


def test_scale_to_energy_hits_target():
    g = G.Grid.torus(8, 1.0)
    p = E.EnergyParams(0.25, 1.0)
    c = _perturbed(g, p, 0.37, seed=5)
    assert E.total_energy(c, p).normalized == pytest.approx(0.37, rel=1e-8)


def test_gap_probe_zero_amplitude_is_trivial():
    rep = Fl.gap_probe(E.EnergyParams(0.125), G.Grid.torus(8, 1.0), 0.0, 3)
    assert rep.trivial_fraction == 1.0
    assert all(t.iterations == 0 and t.final_energy == 0 for t in rep.trials)


def test_gap_probe_small_amplitude_flows_to_vacuum():
    p = E.EnergyParams(0.125, 1.0)
    rep = Fl.gap_probe(p, G.Grid.torus(16, 1.0), 0.1, 3, seed=1)
    assert rep.trivial_fraction == 1.0
    assert [t.seed for t in rep.trials] == [1, 2, 3]
    assert all(t.initial_normalized == pytest.approx(0.1, rel=1e-8) for t in rep.trials)
    rows = list(rep.csv_rows())
    assert len(rows) == 4 and rows[1].endswith(f"trivial,{rep.trials[0].iterations}")


def test_gap_probe_rejects_dirichlet():
    with pytest.raises(ValueError):
        Fl.gap_probe(E.EnergyParams(0.1), G.Grid.cube(8, 1.0), 0.1, 1)

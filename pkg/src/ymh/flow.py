"""Energy-decreasing relaxation, the min-max sweepout family and probes built on them."""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import fft, integrate, optimize
from scipy.stats import qmc

from . import grid as G
from . import su2
from .energy import EnergyReport, el_residuals, energy, total_energy
from .errors import Diverged


@dataclass(frozen=True)
class FlowParams:
    """Descent controls.

    step0 : initial (and maximal) step size
    tol_residual : stop once the Euler-Lagrange residual norm is at most this
    max_iters : iteration budget
    backtrack : step reduction factor on rejection, in (0, 1)
    """

    step0: float = 1.0
    tol_residual: float = 1e-6
    max_iters: int = 1000
    backtrack: float = 0.5

    def __post_init__(self):
        if not (self.step0 > 0 and self.tol_residual > 0 and self.max_iters >= 0):
            raise ValueError("step0 and tol_residual must be positive, max_iters non-negative")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")


@dataclass
class FlowTrace:
    """Per-iteration log of accepted states.

    ``status`` is ``'converged'``, ``'below_floor'`` (energy under a
    requested floor), ``'max_iters'`` or ``'stalled'`` (no representable
    energy decrease left).
    """

    energies: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    status: str = "running"

    def record(self, energy, residual, step):
        self.energies.append(float(energy))
        self.residuals.append(float(residual))
        self.steps.append(float(step))

    @property
    def iterations(self):
        return max(len(self.energies) - 1, 0)

    @property
    def final_energy(self):
        return self.energies[-1]

    @property
    def final_residual(self):
        return self.residuals[-1]

    @property
    def converged(self):
        return self.status == "converged"

    def monotone(self):
        e = np.asarray(self.energies)
        return bool(np.all(np.diff(e) <= 0))

    def rows(self):
        return list(zip(range(len(self.energies)), self.energies, self.residuals, self.steps))


# ----------------------------------------------------------------------------
# preconditioned descent


class Preconditioner:
    """Apply ``(m + Delta_h)^-1`` with the compact 7-point Laplacian.

    Periodic grids use FFTs; Dirichlet grids use a type-I sine transform on
    the free sites, so the result vanishes on the faces.
    """

    def __init__(self, grid, mass):
        self.grid = grid
        h = grid.spacing
        if grid.periodic:
            sym = [(2 - 2 * np.cos(2 * np.pi * np.fft.fftfreq(n))) / h ** 2 for n in grid.dims]
        else:
            sym = [(2 - 2 * np.cos(np.pi * np.arange(1, n - 1) / (n - 1))) / h ** 2 for n in grid.dims]
        lap = sym[0][:, None, None] + sym[1][None, :, None] + sym[2][None, None, :]
        self.inv = 1.0 / (mass + lap)

    def __call__(self, X):
        grid = self.grid
        X = np.asarray(X, dtype=float)
        extra = X.ndim - 3
        inv = self.inv.reshape(self.inv.shape + (1,) * extra)
        if grid.periodic:
            return fft.irfftn(fft.rfftn(X, axes=(0, 1, 2)) * inv[:, :, : grid.dims[2] // 2 + 1],
                              s=grid.dims, axes=(0, 1, 2))
        out = np.zeros_like(X)
        inner = X[1:-1, 1:-1, 1:-1]
        out[1:-1, 1:-1, 1:-1] = fft.idstn(fft.dstn(inner, type=1, axes=(0, 1, 2)) * inv,
                                          type=1, axes=(0, 1, 2))
        return out


def relax(cfg, p, fp=None, precondition=True, callback=None, stop_below=None):
    """Descend the energy from ``cfg`` until the residual drops below ``fp.tol_residual``.

    The search direction is the L2 gradient
    ``(2 eps^2 d_A^* F - 2 [nabla Phi, Phi], 2 nabla^* nabla Phi - (lam/eps^2)(1 - |Phi|^2) Phi)``,
    optionally smoothed by ``(m + Delta_h)^-1 / 2`` with ``m = eps^-2``
    (scaled by a further ``eps^-2`` on the connection part).  A step is accepted only if the energy does not
    increase; rejected steps shrink by ``fp.backtrack`` and accepted ones
    grow by ``1 / fp.backtrack`` for the next iteration, never beyond
    ``fp.step0``.  Dirichlet boundary sites never move.  With ``stop_below``
    the descent also ends once the energy is below that value; since the
    energy never increases, it stays below for any longer run.

    Returns ``(config, FlowTrace)``; ``trace.status`` is ``'converged'``,
    ``'below_floor'``, ``'max_iters'`` or ``'stalled'``.

    Raises
    ------
    Diverged
        If no step down to ``1e-14 * step0`` lowers the energy while the
        residual is still far above the tolerance.
    """
    fp = fp or FlowParams()
    grid = cfg.grid
    eps2 = p.epsilon ** 2
    if precondition:
        # (m + Delta)^-1 / 2 approximates the inverse Hessian of the massive
        # modes, so a unit step removes them instead of flipping their sign
        pre = Preconditioner(grid, 1.0 / eps2)
        pre_A = lambda X: 0.5 * pre(X) / eps2
        pre_P = lambda X: 0.5 * pre(X)
    else:
        pre_A = pre_P = lambda X: X
    trace = FlowTrace()
    E_cur = energy(cfg, p)
    step = fp.step0
    cur = cfg
    last = 0.0
    for it in range(fp.max_iters + 1):
        rA, rPhi, res = el_residuals(cur, p)
        trace.record(E_cur, res, last)
        if callback is not None:
            callback(it, cur, E_cur, res)
        if res <= fp.tol_residual:
            trace.status = "converged"
            break
        if stop_below is not None and E_cur < stop_below:
            trace.status = "below_floor"
            break
        if it == fp.max_iters:
            trace.status = "max_iters"
            break
        dA = -pre_A(2.0 * rA)
        dP = -pre_P(2.0 * rPhi)
        while True:
            trial = G.Configuration.adopt(grid, cur.A + step * dA, cur.Phi + step * dP)
            E_trial = energy(trial, p)
            if E_trial <= E_cur:
                break
            step *= fp.backtrack
            if step < 1e-14 * fp.step0:
                trace.status = "stalled"
                if res > 1e3 * fp.tol_residual and E_trial - E_cur > 1e-12 * max(abs(E_cur), 1e-300):
                    raise Diverged(f"energy cannot decrease at step {step:.2e}, residual {res:.3e}")
                break
        if trace.status == "stalled":
            break
        cur, E_cur, last = trial, E_trial, step
        step = min(step / fp.backtrack, fp.step0)
    return cur, trace


# ----------------------------------------------------------------------------
# sweepout family


def rho(t):
    """Radial cut-off: ``t`` for ``t <= 2/3``, 1 for ``t >= 1``, C^2 and monotone.

    On ``[2/3, 1]`` it is ``2/3 + q(s)/3`` with ``s = 3t - 2`` and
    ``q(s) = 3 s^5 - 7 s^4 + 4 s^3 + s``, so ``0 <= rho' <= q'(2/5) = 1.512``.
    """
    t = np.asarray(t, dtype=float)
    s = np.clip(3.0 * t - 2.0, 0.0, 1.0)
    q = ((3.0 * s - 7.0) * s + 4.0) * s ** 3 + s
    return np.where(t <= 2.0 / 3.0, t, np.where(t >= 1.0, 1.0, 2.0 / 3.0 + q / 3.0))


def center_of(y):
    """``a(y) = -y / (1 - |y|)`` for ``|y| < 1``."""
    y = np.asarray(y, dtype=float)
    return -y / (1.0 - np.linalg.norm(y))


def _sweepout_fields(y, p, grid):
    y = np.asarray(y, dtype=float)
    ny = np.linalg.norm(y)
    if ny > 1 + 1e-12:
        raise ValueError(f"y must lie in the closed unit ball, |y| = {ny}")
    if ny >= 1.0 - 1e-12:
        Phi = np.broadcast_to(y / ny, grid.dims + (3,)).copy()
        return grid.zeros_A(), Phi
    a = center_of(y)
    u = (grid.positions - a) / p.epsilon
    r = np.sqrt(np.sum(u * u, axis=-1))
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(r > 0, rho(r) / r, 1.0)
    Phi = scale[..., None] * u
    A = np.empty(grid.dims + (3, 3))
    for i in range(3):
        A[..., i, :] = su2.bracket(G.deriv(Phi, grid, i), Phi)
    return A, Phi


def build_sweepout(y, p, grid):
    """Member ``H(y)`` of the min-max family on a Dirichlet cube.

    ``Phi_y(x) = R((x - a(y)) / eps)`` with ``R(x) = rho(|x|) x / |x|`` and
    ``A_y = [d Phi_y, Phi_y]`` from centred differences; for ``|y| = 1`` the
    constant pair ``(0, y)``.  The boundary values of the result are its own
    Dirichlet closure.
    """
    A, Phi = _sweepout_fields(y, p, grid)
    return G.Configuration.adopt(grid, A, Phi)


def _far_field_integral(a, box_lo, box_hi, cube_lo, cube_hi):
    """``Int |x - a|^-4`` over the cube minus the box (the box contains ``a`` or is empty)."""

    def inner(t, rho2):
        # antiderivative of (rho2 + t^2)^-2 in t
        rho_ = np.sqrt(rho2)
        return t / (2 * rho2 * (rho2 + t * t)) + np.arctan(t / rho_) / (2 * rho_ ** 3)

    def slab(ranges):
        """Integrate over a rectangular block not containing ``a``."""
        lo = [r[0] for r in ranges]
        hi = [r[1] for r in ranges]
        if any(h <= l for l, h in zip(lo, hi)):
            return 0.0
        # integrate analytically along an axis other than one that separates
        # the block from a, so the remaining integrand stays bounded
        gap = [max(lo[j] - a[j], a[j] - hi[j]) for j in range(3)]
        k = (int(np.argmax(gap)) + 1) % 3
        others = [j for j in range(3) if j != k]
        j0, j1 = others

        def f(v1, v0):
            rho2 = (v0 - a[j0]) ** 2 + (v1 - a[j1]) ** 2
            return inner(hi[k] - a[k], rho2) - inner(lo[k] - a[k], rho2)

        val, _ = integrate.dblquad(f, lo[j0], hi[j0], lo[j1], hi[j1], epsabs=1e-13, epsrel=1e-10)
        return val

    cl, ch = np.asarray(cube_lo, float), np.asarray(cube_hi, float)
    bl = np.clip(box_lo, cl, ch)
    bh = np.clip(box_hi, cl, ch)
    if np.any(bh <= bl):
        # no window: the singular point lies outside the cube
        return slab([(cl[0], ch[0]), (cl[1], ch[1]), (cl[2], ch[2])])
    total = 0.0
    # slabs beyond the box along x, then y within the box's x-range, then z
    for lo_, hi_ in ((cl[0], bl[0]), (bh[0], ch[0])):
        total += slab([(lo_, hi_), (cl[1], ch[1]), (cl[2], ch[2])])
    for lo_, hi_ in ((cl[1], bl[1]), (bh[1], ch[1])):
        total += slab([(bl[0], bh[0]), (lo_, hi_), (cl[2], ch[2])])
    for lo_, hi_ in ((cl[2], bl[2]), (bh[2], ch[2])):
        total += slab([(bl[0], bh[0]), (bl[1], bh[1]), (lo_, hi_)])
    return total


def sweepout_energy(y, p, grid, window=4.0):
    """Energy of ``H(y)`` on ``grid``, evaluated locally.

    With ``window=None`` the whole grid is built.  Otherwise the exact
    discrete energy density is summed over lattice sites with
    ``|x - a|_inf <= window * eps`` (using the global stencils and weights),
    and the rest of the cube contributes the continuum far field
    ``eps^2 |x - a|^-4`` of the unit hedgehog, where ``nabla Phi = 0`` and
    ``|Phi| = 1``.  Returns an :class:`EnergyReport`.
    """
    if window is None:
        return total_energy(build_sweepout(y, p, grid), p)
    y = np.asarray(y, dtype=float)
    if grid.periodic:
        raise ValueError("sweepout lives on a Dirichlet cube")
    if np.linalg.norm(y) >= 1.0 - 1e-12:
        return EnergyReport.from_terms(0.0, 0.0, 0.0, p.epsilon)
    a = center_of(y)
    h = grid.spacing
    eps = p.epsilon
    sl_core, sl_halo, box_lo, box_hi, origin = [], [], [], [], []
    empty = False
    for ax in range(3):
        x = grid.coords(ax)
        n = len(x)
        keep = np.nonzero(np.abs(x - a[ax]) <= window * eps)[0]
        if len(keep) == 0:
            empty = True
            break
        i0, i1 = keep[0], keep[-1] + 1
        j0, j1 = max(i0 - 1, 0), min(i1 + 1, n)
        # a stencil window needs at least 4 sites
        while j1 - j0 < 4:
            j0, j1 = max(j0 - 1, 0), min(j1 + 1, n)
        sl_core.append(slice(i0 - j0, i1 - j0))
        sl_halo.append(slice(j0, j1))
        origin.append(x[j0])
        box_lo.append(x[i0] - (0.5 * h if i0 > 0 else 0.0))
        box_hi.append(x[i1 - 1] + (0.5 * h if i1 < n else 0.0))
    lo, hi = grid.bounds
    eps2 = eps * eps
    curv = grad = pot = 0.0
    if not empty:
        dims = tuple(s.stop - s.start for s in sl_halo)
        sub = G.Grid(dims, h, G.DIRICHLET, origin=tuple(origin))
        # windows cut from the global lattice: derivatives at halo faces are
        # one-sided, so only the core sites are summed
        cfg = build_sweepout(y, p, sub)
        F2 = G.form_norm2(cfg.F)
        D2 = G.form_norm2(cfg.DPhi)
        w = 0.5 * (1.0 - su2.norm2(cfg.Phi))
        core = tuple(sl_core)
        w0, w1, w2 = (grid.axis_weights(ax)[sl_halo[ax]][sl_core[ax]] for ax in range(3))
        wts = w0[:, None, None] * w1[None, :, None] * w2[None, None, :] * h ** 3
        curv = float(np.sum(wts * eps2 * F2[core]))
        grad = float(np.sum(wts * D2[core]))
        pot = float(np.sum(wts * p.lam / eps2 * w[core] ** 2))
        far = _far_field_integral(a, np.array(box_lo), np.array(box_hi), lo, hi)
    else:
        far = _far_field_integral(a, np.zeros(3), np.zeros(3) - 1, lo, hi)
    curv += eps2 * far
    return EnergyReport.from_terms(curv, grad, pot, eps)


def sample_ball(n, include_center=True):
    """Deterministic low-discrepancy points in the closed unit ball (Sobol, volume-uniform)."""
    m = n - 1 if include_center else n
    pts = []
    if m > 0:
        u = qmc.Sobol(d=3, scramble=False).random_base2(int(np.ceil(np.log2(m + 1))))[1:m + 1]
        r = np.cbrt(u[:, 0])
        cos_t = 2.0 * u[:, 1] - 1.0
        sin_t = np.sqrt(1.0 - cos_t ** 2)
        ph = 2.0 * np.pi * u[:, 2]
        pts = np.stack((r * sin_t * np.cos(ph), r * sin_t * np.sin(ph), r * cos_t), axis=-1)
    if include_center:
        pts = np.vstack(([np.zeros(3)], pts)) if m > 0 else np.zeros((1, 3))
    return np.asarray(pts)


class WidthScan(NamedTuple):
    omega_hat: float
    argmax_y: np.ndarray
    ys: np.ndarray
    reports: list


def width_scan(p, grid, y_samples=100, ys=None, window=4.0):
    """Maximum of the energy over sampled members of the sweepout family.

    This is an upper-bound surrogate for the min-max width.  ``ys``
    overrides the default Sobol sample (which includes ``y = 0``).
    """
    ys = sample_ball(y_samples) if ys is None else np.atleast_2d(np.asarray(ys, dtype=float))
    reports = [sweepout_energy(y, p, grid, window) for y in ys]
    totals = np.array([r.total for r in reports])
    k = int(np.argmax(totals))
    return WidthScan(float(totals[k]), ys[k], ys, reports)


# ----------------------------------------------------------------------------
# gap probe


class GapTrial(NamedTuple):
    seed: int
    amplitude: float
    initial_normalized: float
    final_energy: float
    outcome: str
    iterations: int


class GapReport(NamedTuple):
    trials: list
    trivial_fraction: float

    def csv_rows(self):
        yield "seed,amplitude,initial_normalized,final_energy,outcome,iterations"
        for t in self.trials:
            yield f"{t.seed},{t.amplitude!r},{t.initial_normalized!r},{t.final_energy!r},{t.outcome},{t.iterations}"


TRIVIAL_ENERGY = 1e-8


def _random_direction(grid, rng, modes=3):
    from .gauge import smooth_field

    a = np.stack([smooth_field(grid, rng, 1.0, modes) for _ in range(3)], axis=-2)
    phi = smooth_field(grid, rng, 1.0, modes)
    return a, phi


def scale_to_energy(base, a, phi, p, target, tol=1e-10):
    """Smallest ``s >= 0`` with normalised energy of ``base + s (a, phi)`` equal to ``target``."""
    f = lambda s: total_energy(base.perturbed(a, phi, s), p).normalized - target
    if target <= 0 or f(0.0) >= 0:
        return 0.0
    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e6:
            raise ValueError("perturbation direction cannot reach the requested energy")
    return optimize.brentq(f, 0.0, hi, xtol=tol * hi, rtol=1e-12)


def gap_probe(p, grid, amplitude, trials, seed=0, fp=None):
    """Relax perturbations of the trivial pair and record whether they become trivial.

    Trial ``k`` perturbs ``(0, T3)`` along a random smooth direction drawn
    from seed ``seed + k``, scaled to normalised energy ``amplitude``.  A
    trial counts as trivial when the relaxed energy is below ``1e-8``; a
    trial whose descent stalls far from a critical point is nontrivial.
    Descent stops as soon as the energy crosses ``1e-8`` (or the residual
    tolerance is met), because monotone descent cannot change the verdict
    afterwards.
    """
    if not grid.periodic:
        raise ValueError("gap_probe needs a periodic grid")
    fp = fp or FlowParams(step0=1.0, tol_residual=1e-6, max_iters=500)
    base = G.Configuration.trivial(grid)
    out = []
    for k in range(trials):
        s = seed + k
        a, phi = _random_direction(grid, np.random.default_rng(s))
        start = base.perturbed(a, phi, scale_to_energy(base, a, phi, p, amplitude))
        init = total_energy(start, p).normalized
        try:
            _, trace = relax(start, p, fp, stop_below=TRIVIAL_ENERGY)
            e_final, iters = trace.final_energy, trace.iterations
        except Diverged:
            e_final, iters = float("nan"), -1
        outcome = "trivial" if e_final < TRIVIAL_ENERGY else "nontrivial"
        out.append(GapTrial(s, float(amplitude), init, e_final, outcome, iters))
    frac = sum(t.outcome == "trivial" for t in out) / max(len(out), 1)
    return GapReport(out, frac)

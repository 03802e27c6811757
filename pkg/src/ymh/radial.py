"""Spherically symmetric (hedgehog) monopoles.

The ansatz is ``Phi = (H(r)/r) x_hat`` and ``A_i = (1 - K(r)) (x_hat x e_i) / r``
in su(2) coefficients.  Substituting it into the energy and integrating
over angles leaves

    E = 4 pi Int [ 2 eps^2 K'^2 + eps^2 (1 - K^2)^2 / r^2 + (H' - H/r)^2
                   + 2 H^2 K^2 / r^2 + lam r^2 / (4 eps^2) (1 - H^2/r^2)^2 ] dr.

At ``eps = 1, lam = 0`` the minimiser is the BPS monopole
``H = r coth r - 1``, ``K = r / sinh r`` with energy ``8 pi``; other ``eps``
follow by ``K_eps(r) = K_1(r/eps)``, ``H_eps(r) = eps H_1(r/eps)``.

The 1-D functional is discretised with the midpoint rule on cells between
consecutive nodes, with the closure ``H = 0, K = 1`` at ``r = 0`` and the far
node held fixed.  Beyond ``r_max`` the Coulomb tails of the magnetic field
(and of the Higgs field when ``lam = 0``) are added in closed form.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import grid as G
from .energy import EnergyReport
from .errors import Diverged, DomainTooSmall
from .flow import FlowParams, FlowTrace

FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Profiles ``H``, ``K`` on nodes ``0 < r_1 < ... < r_n = r_max``."""

    r: np.ndarray
    H: np.ndarray
    K: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        H = np.asarray(self.H, dtype=float)
        K = np.asarray(self.K, dtype=float)
        if r.ndim != 1 or r.shape != H.shape or r.shape != K.shape:
            raise ValueError("r, H, K must be 1-D arrays of equal length")
        if r[0] <= 0 or np.any(np.diff(r) <= 0):
            raise ValueError("r must be positive and strictly increasing")
        for name, v in (("r", r), ("H", H), ("K", K)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def r_max(self):
        return float(self.r[-1])

    @property
    def higgs_norm(self):
        """``|Phi| = H / r`` at the nodes."""
        return self.H / self.r


# ----------------------------------------------------------------------------
# BPS closed form


def _bps_H1(s):
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    small = s < 1e-2
    t = s[small] ** 2
    out[small] = t / 3.0 - t * t / 45.0 + 2.0 * t ** 3 / 945.0
    big = ~small
    out[big] = s[big] / np.tanh(s[big]) - 1.0
    return out


def _bps_K1(s):
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    small = s < 1e-2
    t = s[small] ** 2
    out[small] = 1.0 - t / 6.0 + 7.0 * t * t / 360.0 - 31.0 * t ** 3 / 15120.0
    big = ~small
    sb = s[big]
    # s / sinh s without overflow for large s
    out[big] = 2.0 * sb * np.exp(-sb) / (1.0 - np.exp(-2.0 * sb))
    return out


def bps_profile(r_max=20.0, n=4000, epsilon=1.0):
    """Closed-form BPS profile on ``n`` equally spaced nodes ``r_max/n, ..., r_max``."""
    if r_max < 10 * epsilon or n < 1000:
        raise ValueError("bps_profile needs r_max >= 10 eps and n >= 1000")
    r = r_max * np.arange(1, n + 1) / n
    s = r / epsilon
    return RadialProfile(r, epsilon * _bps_H1(s), _bps_K1(s))


def bps_derivatives(r, epsilon=1.0):
    """Closed-form ``(H', K')`` of the BPS profile at radii ``r``."""
    s = np.asarray(r, dtype=float) / epsilon
    dH = np.empty_like(s)
    dK = np.empty_like(s)
    small = s < 1e-2
    t = s[small]
    dH[small] = 2 * t / 3 - 4 * t ** 3 / 45 + 12 * t ** 5 / 945
    dK[small] = (-t / 3 + 28 * t ** 3 / 360 - 186 * t ** 5 / 15120) / epsilon
    big = ~small
    sb = s[big]
    K1 = _bps_K1(sb)
    dH[big] = 1 / np.tanh(sb) - K1 ** 2 / sb
    dK[big] = K1 * (1 / sb - 1 / np.tanh(sb)) / epsilon
    return dH, dK


def bogomolny_residuals(prof, epsilon=1.0, derivatives=None):
    """Residuals of the first-order (Bogomolny) system for a hedgehog.

    ``eps K' + K H / r`` and ``(r H' - H - eps (1 - K^2)) / r^2`` at the
    nodes.  ``derivatives = (H', K')`` may be supplied; otherwise second-order
    finite differences are used.
    """
    r, H, K = prof.r, prof.H, prof.K
    if derivatives is None:
        dH = np.gradient(H, r, edge_order=2)
        dK = np.gradient(K, r, edge_order=2)
    else:
        dH, dK = derivatives
    res_K = epsilon * dK + K * H / r
    res_H = (r * dH - H - epsilon * (1.0 - K ** 2)) / r ** 2
    return res_K, res_H


# ----------------------------------------------------------------------------
# discrete reduced energy


def _nodes(prof):
    r = np.concatenate(([0.0], prof.r))
    H = np.concatenate(([0.0], prof.H))
    K = np.concatenate(([1.0], prof.K))
    return r, H, K


def _cell_terms(r, H, K, eps, lam):
    """Per-cell integrands (magnetic, Higgs gradient, potential) times the cell width."""
    dr = np.diff(r)
    rm = 0.5 * (r[1:] + r[:-1])
    Hm = 0.5 * (H[1:] + H[:-1])
    Km = 0.5 * (K[1:] + K[:-1])
    dH = np.diff(H) / dr
    dK = np.diff(K) / dr
    eps2 = eps * eps
    mag = 2 * eps2 * dK ** 2 + eps2 * (1 - Km ** 2) ** 2 / rm ** 2
    grad = (dH - Hm / rm) ** 2 + 2 * Hm ** 2 * Km ** 2 / rm ** 2
    pot = lam * rm ** 2 / (4 * eps2) * (1 - Hm ** 2 / rm ** 2) ** 2
    return FOUR_PI * mag * dr, FOUR_PI * grad * dr, FOUR_PI * pot * dr


def _tails(prof, eps, lam):
    R = prof.r_max
    KR = prof.K[-1]
    mag = FOUR_PI * eps * eps * (1 - KR ** 2) ** 2 / R
    grad = 0.0
    if lam == 0:
        r1, r2 = prof.r[-2], prof.r[-1]
        dh = (prof.H[-1] / r2 - prof.H[-2] / r1) / (r2 - r1)
        c = R * R * dh
        grad = FOUR_PI * c * c / R
    return mag, grad


def radial_energy(prof, p, tail=True):
    """Reduced energy of a hedgehog profile as an :class:`EnergyReport`.

    With ``tail=True`` the closed-form energy beyond ``r_max`` is included.
    """
    r, H, K = _nodes(prof)
    mag, grad, pot = (float(np.sum(t)) for t in _cell_terms(r, H, K, p.epsilon, p.lam))
    if tail:
        tm, tg = _tails(prof, p.epsilon, p.lam)
        mag += tm
        grad += tg
    return EnergyReport.from_terms(mag, grad, pot, p.epsilon)


def radial_energy_density(prof, p):
    """Energy per unit radius at the cell midpoints: ``(r_mid, dE/dr)``."""
    r, H, K = _nodes(prof)
    dr = np.diff(r)
    terms = _cell_terms(r, H, K, p.epsilon, p.lam)
    return 0.5 * (r[1:] + r[:-1]), sum(terms) / dr


def bogomolny_defect(prof, epsilon=1.0):
    """Reduced ``||eps F - *nabla Phi||^2`` inside ``r_max``, on the energy cells.

    Completing squares in the reduced energy gives the density
    ``4 pi [2 (eps K' + K H / r)^2 + (H' - H/r - eps (1 - K^2) / r)^2]``;
    it vanishes exactly on solutions of the first-order system.
    """
    r, H, K = _nodes(prof)
    dr = np.diff(r)
    rm = 0.5 * (r[1:] + r[:-1])
    Hm = 0.5 * (H[1:] + H[:-1])
    Km = 0.5 * (K[1:] + K[:-1])
    dH = np.diff(H) / dr
    dK = np.diff(K) / dr
    dens = 2 * (epsilon * dK + Km * Hm / rm) ** 2 + (dH - Hm / rm - epsilon * (1 - Km ** 2) / rm) ** 2
    return float(FOUR_PI * np.sum(dens * dr))


def _cell_derivs(r, H, K, eps, lam):
    """Gradient and Hessian of each cell energy in ``(H_a, K_a, H_b, K_b)``."""
    dr = np.diff(r)
    rm = 0.5 * (r[1:] + r[:-1])
    Hm = 0.5 * (H[1:] + H[:-1])
    Km = 0.5 * (K[1:] + K[:-1])
    dH = np.diff(H) / dr
    dK = np.diff(K) / dr
    e2 = eps * eps
    q = lam / (4 * e2)
    u = dH - Hm / rm
    s = 1 - Km ** 2
    t = 1 - Hm ** 2 / rm ** 2
    n = len(dr)
    # derivatives of the integrand in variables (Hm, Km, dH, dK)
    g = np.zeros((n, 4))
    g[:, 0] = -2 * u / rm + 4 * Hm * Km ** 2 / rm ** 2 - 4 * q * Hm * t
    g[:, 1] = -4 * e2 * s * Km / rm ** 2 + 4 * Hm ** 2 * Km / rm ** 2
    g[:, 2] = 2 * u
    g[:, 3] = 4 * e2 * dK
    h = np.zeros((n, 4, 4))
    h[:, 0, 0] = 2 / rm ** 2 + 4 * Km ** 2 / rm ** 2 - 4 * q * t + 8 * q * Hm ** 2 / rm ** 2
    h[:, 0, 1] = h[:, 1, 0] = 8 * Hm * Km / rm ** 2
    h[:, 0, 2] = h[:, 2, 0] = -2 / rm
    h[:, 1, 1] = -4 * e2 * (s - 2 * Km ** 2) / rm ** 2 + 4 * Hm ** 2 / rm ** 2
    h[:, 2, 2] = 2
    h[:, 3, 3] = 4 * e2
    # chain rule to node values (H_a, K_a, H_b, K_b)
    J = np.zeros((n, 4, 4))
    J[:, 0, 0] = J[:, 0, 2] = 0.5
    J[:, 1, 1] = J[:, 1, 3] = 0.5
    J[:, 2, 0], J[:, 2, 2] = -1 / dr, 1 / dr
    J[:, 3, 1], J[:, 3, 3] = -1 / dr, 1 / dr
    w = FOUR_PI * dr
    grad = w[:, None] * np.einsum("nij,ni->nj", J, g)
    hess = w[:, None, None] * np.einsum("nki,nkl,nlj->nij", J, h, J)
    return grad, hess


def _assemble(r, H, K, eps, lam):
    """Gradient vector and banded Hessian for free nodes ``1 .. n-1`` (interleaved H, K)."""
    gc, hc = _cell_derivs(r, H, K, eps, lam)
    ncell = len(gc)
    nfull = 2 * (ncell + 1)
    grad = np.zeros(nfull)
    # upper banded storage for solveh_banded, bandwidth 3
    ab = np.zeros((4, nfull))
    for c in range(4):
        idx = 2 * np.arange(ncell) + c
        np.add.at(grad, idx, gc[:, c])
        for d in range(c, 4):
            col = 2 * np.arange(ncell) + d
            np.add.at(ab[3 - (d - c)], col, hc[:, c, d])
    free = slice(2, nfull - 2)
    return grad[free], ab[:, free]


def _residual(grad, r):
    """Sup norm of the gradient divided by the node quadrature weight."""
    w = FOUR_PI * 0.5 * (r[2:] - r[:-2])
    return float(np.max(np.abs(grad.reshape(-1, 2)) / w[:, None]))


def radial_relax(prof, p, fp=None, far="auto"):
    """Minimise the reduced energy over free nodes with a safeguarded Newton method.

    Every accepted step lowers the discrete energy (plain energy-decrease
    backtracking), so the trace is monotone like a gradient flow, but steps
    follow the banded Hessian.  ``far`` chooses the outer node: ``'fixed'``
    keeps the input values, ``'vacuum'`` sets ``H = r_max, K = 0``;
    ``'auto'`` picks ``'vacuum'`` for ``lam > 0``.

    Returns ``(profile, FlowTrace)``.  The residual is the sup norm of the
    discrete Euler-Lagrange expression per unit ``4 pi r``-measure.
    """
    fp = fp or FlowParams(step0=1.0, tol_residual=1e-8, max_iters=200, backtrack=0.5)
    eps, lam = p.epsilon, p.lam
    if far == "auto":
        far = "vacuum" if lam > 0 else "fixed"
    H = prof.H.copy()
    K = prof.K.copy()
    if far == "vacuum":
        H[-1], K[-1] = prof.r_max, 0.0
    elif far != "fixed":
        raise ValueError(f"unknown far-field mode {far!r}")

    def total(Hv, Kv):
        r, Hn, Kn = _nodes(RadialProfile(prof.r, Hv, Kv))
        return float(sum(np.sum(t) for t in _cell_terms(r, Hn, Kn, eps, lam)))

    r_nodes = np.concatenate(([0.0], prof.r))
    trace = FlowTrace()
    E = total(H, K)
    status = "max_iters"
    for it in range(fp.max_iters + 1):
        _, Hn, Kn = _nodes(RadialProfile(prof.r, H, K))
        grad, ab = _assemble(r_nodes, Hn, Kn, eps, lam)
        res = _residual(grad, r_nodes)
        trace.record(E, res, 0.0 if it == 0 else step)
        if res <= fp.tol_residual:
            status = "converged"
            break
        if it == fp.max_iters:
            break
        shift = 0.0
        diag_scale = np.max(np.abs(ab[-1]))
        while True:
            ab_s = ab.copy()
            ab_s[-1] += shift
            try:
                delta = -linalg.solveh_banded(ab_s, grad)
                break
            except linalg.LinAlgError:
                shift = max(2.0 * shift, 1e-8 * diag_scale)
        step = fp.step0
        while True:
            Ht, Kt = H.copy(), K.copy()
            Ht[:-1] += step * delta[0::2]
            Kt[:-1] += step * delta[1::2]
            Et = total(Ht, Kt)
            if Et <= E:
                break
            step *= fp.backtrack
            if step < 1e-14:
                if res < 1e3 * fp.tol_residual or abs(Et - E) <= 1e-14 * abs(E):
                    # rounding floor: no representable decrease left
                    status = "stalled"
                    break
                raise Diverged(f"no energy decrease along Newton direction (residual {res:.3e})")
        if status == "stalled":
            break
        H, K, E = Ht, Kt, Et
    trace.status = status
    return RadialProfile(prof.r, H, K), trace


def initial_profile(r_max, n, p):
    """Scaled BPS profile adjusted so that ``H(r_max) = r_max``."""
    r_max = float(r_max)
    prof = bps_profile(max(r_max, 10 * p.epsilon), n, p.epsilon)
    H = prof.H * (r_max / prof.H[-1])
    return RadialProfile(prof.r, H, prof.K)


# ----------------------------------------------------------------------------
# lifting to the 3-D grid


def _small_r_coeffs(prof):
    """Values of ``H/r^2`` and ``(1-K)/r^2`` with ``r = 0`` prepended by extrapolation."""
    r = prof.r
    v = prof.H / r ** 2
    u = (1.0 - prof.K) / r ** 2
    rr = np.concatenate(([0.0], r))
    # both coefficients are even in r near the origin
    v0 = v[0] - (v[1] - v[0]) * r[0] ** 2 / (r[1] ** 2 - r[0] ** 2)
    u0 = u[0] - (u[1] - u[0]) * r[0] ** 2 / (r[1] ** 2 - r[0] ** 2)
    return rr, np.concatenate(([v0], v)), np.concatenate(([u0], u))


def hedgehog_to_grid(prof, grid, center=None, min_boundary_higgs=0.99):
    """Evaluate the hedgehog ansatz at every grid site.

    ``Phi = v(r) x`` and ``A_i = u(r) (x x e_i)`` with ``v = H/r^2`` and
    ``u = (1-K)/r^2`` interpolated linearly in ``r``; both are smooth at the
    centre, so the fields are smooth there too.

    Raises
    ------
    DomainTooSmall
        If a site lies beyond ``r_max`` or ``H/r`` at the radius of the
        inscribed sphere is below ``min_boundary_higgs``.
    """
    if center is None:
        lo, hi = grid.bounds
        center = 0.5 * (lo + hi)
    center = np.asarray(center, dtype=float)
    lo, hi = grid.bounds
    far = np.sqrt(np.sum(np.maximum(np.abs(lo - center), np.abs(hi - center)) ** 2))
    if far > prof.r_max * (1 + 1e-12):
        raise DomainTooSmall(f"grid reaches r = {far:.3f} beyond profile r_max = {prof.r_max}")
    r_in = float(np.min(np.concatenate((center - lo, hi - center))))
    h_in = float(np.interp(r_in, prof.r, prof.higgs_norm))
    if h_in < min_boundary_higgs:
        raise DomainTooSmall(
            f"|Phi| = {h_in:.4f} at the inscribed radius {r_in:.3f} is below {min_boundary_higgs}")
    rr, v, u = _small_r_coeffs(prof)
    A = np.empty(grid.dims + (3, 3))
    Phi = np.empty(grid.dims + (3,))
    xs = grid.coords(0) - center[0]
    ys = grid.coords(1) - center[1]
    zs = grid.coords(2) - center[2]
    y, z = np.meshgrid(ys, zs, indexing="ij")
    for i, xv in enumerate(xs):
        x = np.stack(np.broadcast_arrays(xv, y, z), axis=-1)
        rad = np.sqrt(np.sum(x * x, axis=-1))
        vs = np.interp(rad, rr, v)[..., None]
        us = np.interp(rad, rr, u)[..., None]
        Phi[i] = vs * x
        # x cross e_i for i = x, y, z
        A[i, ..., 0, :] = us * np.stack((np.zeros_like(y), x[..., 2], -x[..., 1]), axis=-1)
        A[i, ..., 1, :] = us * np.stack((-x[..., 2], np.zeros_like(y), x[..., 0]), axis=-1)
        A[i, ..., 2, :] = us * np.stack((x[..., 1], -x[..., 0], np.zeros_like(y)), axis=-1)
    return G.Configuration.adopt(grid, A, Phi)

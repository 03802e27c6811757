"""Energy and charge measures, magnetic charge, concentration and rescaling.

``mu = eps^-1 e_eps`` is the normalised energy density and
``kappa = 2 <*F, nabla Phi>`` the charge density; ``|kappa| <= mu`` holds
pointwise by Cauchy-Schwarz.  The magnetic charge is computed two ways:
as the volume integral ``(1/4 pi) Int <*F, nabla Phi>`` and as the degree of
``Phi / |Phi|`` on a sphere, integrated over an icosphere mesh.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy import fft, ndimage, signal

from . import grid as G
from . import su2
from .energy import EnergyParams, charge_density, energy_density, w_field
from .errors import BallOutOfDomain, HiggsVanishesOnSphere, WindowOutOfDomain


@dataclass(frozen=True, eq=False)
class MeasureField:
    grid: G.Grid
    mu: np.ndarray
    kappa: np.ndarray

    def mass(self, region=G.ALL, which="mu"):
        return G.integrate(getattr(self, which), self.grid, region)


def measures(cfg, p):
    """Per-site ``mu = e / eps`` and ``kappa = 2 <*F, nabla Phi>``."""
    mu = G.slab_apply(cfg, lambda c: energy_density(c, p)) / p.epsilon
    kappa = 2.0 * G.slab_apply(cfg, charge_density)
    return MeasureField(cfg.grid, mu, kappa)


def charge_volume(cfg, p=None, region=G.ALL):
    """``(1 / 4 pi) Int_region <*F, nabla Phi>``; ``p`` is accepted for symmetry and unused."""
    dens = G.slab_apply(cfg, charge_density)
    return G.integrate(dens, cfg.grid, region) / (4.0 * np.pi)


# ----------------------------------------------------------------------------
# sphere meshes and sampling


@lru_cache(maxsize=None)
def icosphere(level=4):
    """Unit icosphere: ``(vertices, faces)`` with outward-oriented faces."""
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
             (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
             (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    V = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    F = faces
    for _ in range(level):
        cache = {}
        newF = []

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = V[a] + V[b]
                V.append(m / np.linalg.norm(m))
                cache[key] = len(V) - 1
            return cache[key]

        for a, b, c in F:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            newF += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        F = newF
    V = np.array(V)
    F = np.array(F, dtype=np.int64)
    V.setflags(write=False)
    F.setflags(write=False)
    return V, F


def solid_angles(a, b, c):
    """Signed solid angle of spherical triangles with unit vertices ``a, b, c``."""
    num = np.einsum("...k,...k->...", a, np.cross(b, c))
    den = 1.0 + np.einsum("...k,...k->...", a, b) + np.einsum("...k,...k->...", b, c) \
        + np.einsum("...k,...k->...", c, a)
    return 2.0 * np.arctan2(num, den)


def _check_sphere(grid, center, r):
    lo, hi = grid.bounds
    c = np.asarray(center, dtype=float)
    if grid.periodic:
        if grid.twist_n:
            raise BallOutOfDomain("sphere sampling is not supported on twisted grids")
        if 2 * r >= min(grid.lengths):
            raise BallOutOfDomain(f"sphere radius {r} does not fit the periodic box")
    elif np.any(c - r < lo) or np.any(c + r > hi):
        raise BallOutOfDomain(f"sphere at {c} with radius {r} leaves the box")
    return c


def sample(field, grid, points):
    """Trilinear interpolation of a site field at arbitrary points.

    ``field`` has shape ``grid.dims + trailing``; returns ``points.shape[:-1] + trailing``.
    """
    field = np.asarray(field, dtype=float)
    lo = np.array(grid.origin)
    idx = ((np.asarray(points) - lo) / grid.spacing).reshape(-1, 3).T
    trailing = field.shape[3:]
    flat = field.reshape(grid.dims + (-1,))
    mode = "grid-wrap" if grid.periodic else "nearest"
    out = np.stack([ndimage.map_coordinates(flat[..., k], idx, order=1, mode=mode)
                    for k in range(flat.shape[-1])], axis=-1)
    return out.reshape(np.shape(points)[:-1] + trailing)


def charge_degree(cfg, center, r, level=4):
    """Degree of ``Phi / |Phi|`` on the sphere ``|x - center| = r``.

    Evaluates ``-(1/4 pi) sum <Phi_hat, 1/2 [d Phi_hat, d Phi_hat]>`` over the
    triangles of an icosphere, with ``Phi`` sampled trilinearly at the
    vertices and ``Phi_hat`` taken at the (normalised) triangle centroid.

    Raises
    ------
    HiggsVanishesOnSphere
        If ``|Phi| <= 0.5`` at some sample point.
    """
    grid = cfg.grid
    c = _check_sphere(grid, center, r)
    V, F = icosphere(level)
    phi = sample(cfg.Phi, grid, c + r * V)
    mod = su2.norm(phi)
    if mod.min() <= 0.5:
        raise HiggsVanishesOnSphere(f"min |Phi| = {mod.min():.3f} on the sphere of radius {r}")
    n = phi / mod[:, None]
    n1, n2, n3 = n[F[:, 0]], n[F[:, 1]], n[F[:, 2]]
    cen = n1 + n2 + n3
    cen /= np.linalg.norm(cen, axis=-1, keepdims=True)
    integrand = su2.inner(cen, 0.5 * su2.bracket(n2 - n1, n3 - n1))
    return float(-np.sum(integrand) / (4.0 * np.pi))


def degree_solid_angle(cfg, center, r, level=4):
    """Degree as the sum of signed solid angles of the Gauss-map triangles."""
    grid = cfg.grid
    c = _check_sphere(grid, center, r)
    V, F = icosphere(level)
    phi = sample(cfg.Phi, grid, c + r * V)
    n = phi / su2.norm(phi)[:, None]
    return float(np.sum(solid_angles(n[F[:, 0]], n[F[:, 1]], n[F[:, 2]])) / (4.0 * np.pi))


def sphere_quadrature(level=4):
    """Points (unit) and weights (solid angle) for integration over the unit sphere."""
    V, F = icosphere(level)
    a, b, c = V[F[:, 0]], V[F[:, 1]], V[F[:, 2]]
    w = solid_angles(a, b, c)
    m = a + b + c
    return m / np.linalg.norm(m, axis=-1, keepdims=True), w


# ----------------------------------------------------------------------------
# concentration


class Concentration(NamedTuple):
    center: tuple
    mass: float
    charge: float


@dataclass
class ConcentrationReport:
    points: list
    eta_star_user: float
    radius: float

    def text(self):
        lines = [f"concentration radius={self.radius!r} eta_star_user={self.eta_star_user!r} "
                 f"points={len(self.points)}"]
        for pt in self.points:
            cx, cy, cz = pt.center
            lines.append(f"point center=({cx:.6g},{cy:.6g},{cz:.6g}) "
                         f"mass={pt.mass:.10g} charge={pt.charge:.10g}")
        return "\n".join(lines)


def _ball_offsets(grid, r):
    m = int(np.floor(r / grid.spacing))
    ax = np.arange(-m, m + 1)
    d2 = ax[:, None, None] ** 2 + ax[None, :, None] ** 2 + ax[None, None, :] ** 2
    return (d2 * grid.spacing ** 2 <= r * r).astype(float)


def ball_masses(field, grid, r):
    """Mass of ``field`` in the sharp ball of radius ``r`` around every site.

    Periodic grids wrap around; on Dirichlet grids balls are clipped to the box.
    """
    kern = _ball_offsets(grid, r)
    f = np.asarray(field, dtype=float) * grid.weights * grid.spacing ** 3
    if grid.periodic:
        if kern.shape[0] > min(grid.dims):
            raise BallOutOfDomain(f"ball radius {r} does not fit the periodic box")
        pad = kern.shape[0] // 2
        big = np.pad(f, pad, mode="wrap")
        return signal.fftconvolve(big, kern, mode="valid")
    return signal.fftconvolve(f, kern, mode="same")


def detect_concentration(m, r, eta_star_user=1.0):
    """Greedy disjoint balls of radius ``r`` whose ``mu``-mass is at least ``eta_star_user``.

    Balls are taken in decreasing order of mass; each carries its
    ``kappa``-mass as the charge estimate.
    """
    grid = m.grid
    mass = ball_masses(m.mu, grid, r)
    charge = ball_masses(m.kappa, grid, r)
    pos = grid.positions
    avail = np.ones(grid.dims, dtype=bool)
    L = np.array(grid.lengths)
    points = []
    while True:
        cand = np.where(avail, mass, -np.inf)
        i = np.unravel_index(np.argmax(cand), grid.dims)
        if not cand[i] >= eta_star_user:
            break
        c = pos[i]
        points.append(Concentration(tuple(float(v) for v in c), float(mass[i]), float(charge[i])))
        d = pos - c
        if grid.periodic:
            d = d - L * np.round(d / L)
        avail &= np.sum(d * d, axis=-1) > (2 * r) ** 2
    return ConcentrationReport(points, float(eta_star_user), float(r))


# ----------------------------------------------------------------------------
# rescaling


def rescale(cfg, p, center, t, window=None):
    """Blow up (``t < 1``) or shrink the picture around ``center`` by the factor ``t``.

    Sites are kept and reinterpreted: the new coordinate is
    ``u = (x - center) / t``, so the spacing becomes ``h / t``, while
    ``A -> t A``, ``Phi -> Phi`` and ``eps -> eps / t``.  Discrete derivatives
    scale exactly, hence normalised energies of corresponding regions agree
    to rounding.  With ``window`` (a half-width in original units) only the
    sites with ``|x - center|_inf <= window`` are kept, as a Dirichlet grid.

    Raises
    ------
    WindowOutOfDomain
    """
    if not t > 0:
        raise ValueError("t must be positive")
    grid = cfg.grid
    c = np.asarray(center, dtype=float)
    A, Phi = cfg.A, cfg.Phi
    if window is None:
        lo, hi = grid.bounds
        if np.any(c < lo) or np.any(c > hi):
            raise WindowOutOfDomain(f"center {c} lies outside the domain")
        origin = (np.array(grid.origin) - c) / t
        new = G.Grid(grid.dims, grid.spacing / t, grid.boundary, grid.twist_n, tuple(origin))
    else:
        sl = []
        lo_site = []
        for ax in range(3):
            x = grid.coords(ax)
            keep = np.nonzero(np.abs(x - c[ax]) <= window * (1 + 1e-12))[0]
            lo_ok = c[ax] - window >= x[0] - 1e-9 * grid.spacing
            hi_ok = c[ax] + window <= x[-1] + 1e-9 * grid.spacing
            if not (lo_ok and hi_ok) or len(keep) < 4:
                raise WindowOutOfDomain(f"window of half-width {window} around {c} leaves the domain")
            sl.append(slice(keep[0], keep[-1] + 1))
            lo_site.append(x[keep[0]])
        sl = tuple(sl)
        A, Phi = A[sl], Phi[sl]
        origin = (np.array(lo_site) - c) / t
        new = G.Grid(A.shape[:3], grid.spacing / t, G.DIRICHLET, 0, tuple(origin))
    out = G.Configuration(new, t * A, Phi)
    return out, EnergyParams(p.epsilon / t, p.lam)


# ----------------------------------------------------------------------------
# local conservation law


class ConservationRow(NamedTuple):
    radius: float
    lhs: float
    rhs: float


def conservation_check(cfg, p, center, radii, level=5):
    """Both sides of the flat local conservation law on balls ``B_r(center)``.

    ``rhs = Int_{B_r} (eps^2 |F|^2 - |nabla Phi|^2 - 3 lam w^2 / eps^2)`` and
    ``lhs = r Int_{dB_r} (2 eps^2 |i_r F|^2 + 2 |nabla_r Phi|^2 - e)``.  They
    agree for critical points only.  Surface integrals use an icosphere with
    spherical-triangle weights and trilinear sampling.
    """
    grid = cfg.grid
    eps2 = p.epsilon ** 2
    w = w_field(cfg)
    vol = eps2 * G.form_norm2(cfg.F) - G.form_norm2(cfg.DPhi) - 3.0 * p.lam * w * w / eps2
    e = energy_density(cfg, p)
    # full antisymmetric F_ij for contraction with the radial direction
    Ffull = np.zeros(grid.dims + (3, 3, 3))
    for i in range(3):
        for j in range(3):
            Ffull[..., i, j, :] = G.two_form_component(cfg.F, i, j)
    pts, wts = sphere_quadrature(level)
    rows = []
    for r in radii:
        c = _check_sphere(grid, center, r)
        rhs = G.integrate(vol, grid, G.Ball(tuple(c), r))
        x = c + r * pts
        Fs = sample(Ffull, grid, x)
        Ds = sample(cfg.DPhi, grid, x)
        es = sample(e, grid, x)
        iF = np.einsum("ni,nijk->njk", pts, Fs)
        dr = np.einsum("ni,nik->nk", pts, Ds)
        integrand = 2 * eps2 * np.sum(iF ** 2, axis=(1, 2)) + 2 * np.sum(dr ** 2, axis=1) - es
        lhs = r * r * r * float(np.sum(wts * integrand))
        rows.append(ConservationRow(float(r), lhs, rhs))
    return rows


# ----------------------------------------------------------------------------
# Hodge decomposition of the longitudinal curvature


@dataclass(frozen=True, eq=False)
class HodgeSplit:
    """``omega = h + df + d^* alpha`` for a real 1-form on a periodic grid."""

    h: np.ndarray
    f: np.ndarray
    alpha: np.ndarray
    omega: np.ndarray
    df: np.ndarray
    dstar_alpha: np.ndarray

    def reconstruct(self):
        return self.h + self.df + self.dstar_alpha


def _wavenumbers(grid):
    ks = []
    for ax, n in enumerate(grid.dims):
        k = 2 * np.pi * np.fft.fftfreq(n, d=grid.spacing)
        if n % 2 == 0:
            # the Nyquist mode has no real-valued derivative
            k[n // 2] = 0.0
        shape = [1, 1, 1]
        shape[ax] = -1
        ks.append(k.reshape(shape))
    return ks


def hodge_split(omega, grid):
    """Spectral Hodge decomposition of a real 1-form ``omega`` (shape ``dims + (3,)``).

    The gradient part is the projection onto ``k k^T / |k|^2``, the
    harmonic part is the mean, and the remainder is co-exact, written as
    ``d^* alpha`` with ``alpha = d beta``.  Modes whose wavenumber vanishes
    only because of the Nyquist convention are kept in the co-exact field.
    """
    if not grid.periodic:
        raise ValueError("hodge_split needs a periodic grid")
    omega = np.asarray(omega, dtype=float)
    kx, ky, kz = _wavenumbers(grid)
    k = np.broadcast_arrays(kx, ky, kz)
    k2 = k[0] ** 2 + k[1] ** 2 + k[2] ** 2
    nz = k2 > 0
    safe = np.where(nz, k2, 1.0)
    W = fft.fftn(omega, axes=(0, 1, 2))
    h = W[0, 0, 0].real / np.prod(grid.dims)
    W[0, 0, 0] = 0.0
    div = k[0] * W[..., 0] + k[1] * W[..., 1] + k[2] * W[..., 2]
    fhat = np.where(nz, -1j * div / safe, 0.0)
    dfhat = np.stack([1j * k[a] * fhat for a in range(3)], axis=-1)
    chat = W - dfhat
    beta = chat / safe[..., None]
    beta[~nz] = 0.0
    alpha_hat = np.empty(grid.dims + (3,), dtype=complex)
    for p_, (i, j) in enumerate(G.PAIRS):
        alpha_hat[..., p_] = 1j * k[i] * beta[..., j] - 1j * k[j] * beta[..., i]
    inv = lambda X: fft.ifftn(X, axes=(0, 1, 2)).real
    f = fft.ifftn(fhat).real
    df = inv(dfhat)
    dstar_alpha = inv(chat)
    return HodgeSplit(np.asarray(h), f, inv(alpha_hat), omega, df, dstar_alpha)


def longitudinal_form(cfg, p):
    """``omega = eps^{1/2} <*F, Phi>`` as a real 1-form."""
    return np.sqrt(p.epsilon) * su2.inner(G.star2(cfg.F), cfg.Phi[..., None, :])


def hodge_longitudinal(cfg, p):
    """Hodge decomposition of ``eps^{1/2} <*F, Phi>`` on a periodic grid."""
    return hodge_split(longitudinal_form(cfg, p), cfg.grid)

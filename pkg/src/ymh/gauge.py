"""Gauge transformations, Coulomb projection and the reducible flux pair.

SU(2) elements are unit quaternions ``q = (q0, q1, q2, q3)`` standing for
``q0 + sum_k q_k * 2 T_k``.  Since ``(2T_1)(2T_2) = -2T_3`` the product is

    (a0, a) (b0, b) = (a0 b0 - a.b,  a0 b + b0 a - a x b)

and the su(2) element with coefficients ``c`` is the pure quaternion
``(0, c / 2)``.  The adjoint action is a rotation of coefficient triples.
"""

from typing import NamedTuple

import numpy as np
from scipy import fft

from . import grid as G
from . import su2
from .errors import NoConvergence, NonconformingGauge

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def qmul(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a0, av = a[..., :1], a[..., 1:]
    b0, bv = b[..., :1], b[..., 1:]
    s = a0 * b0 - np.sum(av * bv, axis=-1, keepdims=True)
    v = a0 * bv + b0 * av - np.cross(av, bv)
    return np.concatenate((s, v), axis=-1)


def qconj(q):
    """Conjugate, which is the inverse for unit quaternions."""
    q = np.asarray(q, dtype=float)
    return np.concatenate((q[..., :1], -q[..., 1:]), axis=-1)


def exp_su2(x):
    """Closed-form exponential of an su(2) element as a unit quaternion.

    ``exp(c . T) = cos(|c|/2) + sin(|c|/2) c_hat . 2T``; in particular
    ``exp(2 pi T3)`` is ``-1``.
    """
    x = su2.as_su2(x)
    theta = su2.norm(x)
    half = 0.5 * theta
    # sin(t/2)/t is smooth at 0; np.sinc(u) = sin(pi u)/(pi u)
    scale = 0.5 * np.sinc(half / np.pi)
    return np.concatenate((np.cos(half)[..., None], scale[..., None] * x), axis=-1)


def rotation_matrix(q):
    """3x3 matrix of ``Ad(q)`` acting on coefficient triples."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[..., 0], -q[..., 1], -q[..., 2], -q[..., 3]
    R = np.empty(q.shape[:-1] + (3, 3))
    R[..., 0, 0] = 1 - 2 * (y * y + z * z)
    R[..., 0, 1] = 2 * (x * y - z * w)
    R[..., 0, 2] = 2 * (x * z + y * w)
    R[..., 1, 0] = 2 * (x * y + z * w)
    R[..., 1, 1] = 1 - 2 * (x * x + z * z)
    R[..., 1, 2] = 2 * (y * z - x * w)
    R[..., 2, 0] = 2 * (x * z - y * w)
    R[..., 2, 1] = 2 * (y * z + x * w)
    R[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return R


def adjoint(q, X):
    """``q X q^-1`` for su(2) coefficient arrays ``X`` (extra axes before the last allowed)."""
    R = rotation_matrix(q)
    X = np.asarray(X, dtype=float)
    extra = X.ndim - R.ndim + 1
    R = R.reshape(R.shape[:-2] + (1,) * extra + (3, 3))
    return np.einsum("...ij,...j->...i", R, X)


def transition(grid):
    """Quaternion ``u(y)`` used on the x-wrap of a twisted grid, one per y index."""
    theta = -grid.twist_angle()
    u = np.zeros(theta.shape + (4,))
    u[:, 0] = np.cos(0.5 * theta)
    u[:, 3] = np.sin(0.5 * theta)
    return u


def _qderiv(q, grid, axis):
    if not (grid.twist_n and axis == 0):
        return G.deriv(q, grid, axis)
    u = transition(grid)[:, None, :]
    ahead = qmul(qmul(u, q[0]), qconj(u))
    behind = qmul(qmul(qconj(u), q[-1]), u)
    out = np.empty_like(q)
    h2 = 2.0 * grid.spacing
    out[1:-1] = (q[2:] - q[:-2]) / h2
    out[0] = (q[1] - behind) / h2
    out[-1] = (ahead - q[-2]) / h2
    return out


def check_gauge(grid, g, tol=1e-12):
    g = np.asarray(g, dtype=float)
    if g.shape != grid.dims + (4,):
        raise NonconformingGauge(f"gauge field shape {g.shape} does not match {grid.dims + (4,)}")
    if np.max(np.abs(np.sum(g * g, axis=-1) - 1.0)) > tol:
        raise NonconformingGauge("gauge field is not unit-norm")
    if not grid.periodic:
        edge = ~grid.free_mask
        if np.max(np.abs(g[edge] - IDENTITY)) > tol:
            raise NonconformingGauge("gauge field must be the identity on Dirichlet boundary sites")
    return g


def apply_gauge(cfg, g):
    """Gauge-transformed pair ``(g d(g^-1) + g A g^-1, g Phi g^-1)``.

    ``d(g^-1)`` uses the same centred differences as the field operators, so
    the result is covariant up to O(h^2); constant ``g`` acts exactly.
    """
    grid = cfg.grid
    g = check_gauge(grid, g)
    ginv = qconj(g)
    A = adjoint(g, cfg.A)
    for i in range(3):
        # g d(g^-1) is pure up to O(h^2); keep its vector part
        A[..., i, :] += 2.0 * qmul(g, _qderiv(ginv, grid, i))[..., 1:]
    return G.Configuration(grid, A, adjoint(g, cfg.Phi))


def smooth_field(grid, rng, amplitude=1.0, modes=2):
    """Random smooth su(2) field made of low Fourier modes.

    On Dirichlet grids it is multiplied by a bump that vanishes on the faces.
    Not a valid section on twisted grids.
    """
    pos = grid.positions
    lo, _ = grid.bounds
    L = np.array(grid.lengths)
    u = (pos - lo) / L
    out = np.zeros(grid.dims + (3,))
    for _ in range(modes * 3):
        k = rng.integers(-modes, modes + 1, size=3)
        phase = rng.uniform(0, 2 * np.pi)
        coeff = rng.normal(size=3)
        out += coeff * np.cos(2 * np.pi * (u @ k) + phase)[..., None]
    if not grid.periodic:
        bump = np.prod(np.sin(np.pi * u), axis=-1) * grid.free_mask
        out *= bump[..., None]
    return amplitude * out / np.sqrt(modes * 3)


def random_gauge(grid, rng, amplitude=1.0, modes=2):
    if grid.twist_n:
        raise ValueError("random_gauge builds untwisted fields only")
    return exp_su2(smooth_field(grid, rng, amplitude, modes))


# ----------------------------------------------------------------------------
# Coulomb projection


def dstar_A(grid, A):
    """``d^* A = sum_i D_i^dagger A_i``."""
    return sum(G.deriv_adjoint(A[..., i, :], grid, i) for i in range(3))


def _dstar_norm(grid, A):
    d = dstar_A(grid, A)
    return float(np.sqrt(G.pair(d, d, grid)))


def _solve_laplacian(grid, rhs):
    """Solve ``d^* d chi = rhs`` spectrally; modes with zero symbol are dropped."""
    h = grid.spacing
    sym = np.zeros(grid.dims)
    for ax, n in enumerate(grid.dims):
        k = 2 * np.pi * np.fft.fftfreq(n, d=h)
        shape = [1, 1, 1]
        shape[ax] = -1
        sym = sym + (np.sin(k * h) ** 2 / h ** 2).reshape(shape)
    small = sym < 1e-12 * sym.max()
    sym[small] = 1.0
    R = fft.fftn(rhs, axes=(0, 1, 2))
    R /= sym[..., None]
    R[small] = 0.0
    return fft.ifftn(R, axes=(0, 1, 2)).real


class CoulombResult(NamedTuple):
    config: G.Configuration
    dstar_norm: float
    iterations: int
    converged: bool
    trace: list
    energy_change: float


def coulomb_project(cfg, tol=1e-8, max_iter=50, p=None, strict=False):
    """Drive ``d^* A`` toward zero by repeated linearised gauge updates.

    Each iteration solves ``Delta chi = d^* A`` spectrally and applies
    ``exp(chi)``; the step is halved until ``||d^* A||`` decreases, so the
    logged ``trace`` is monotone.  Only untwisted periodic grids are handled.

    Returns a :class:`CoulombResult`; ``energy_change`` is the covariance
    defect of the energy for params ``p`` (``nan`` if ``p`` is None).  When
    the tolerance is missed the best iterate is returned with
    ``converged=False``, or :class:`NoConvergence` is raised if ``strict``.
    """
    grid = cfg.grid
    norm = _dstar_norm(grid, cfg.A)
    trace = [norm]
    if norm <= tol:
        return CoulombResult(cfg, norm, 0, True, trace, 0.0)
    if not grid.periodic or grid.twist_n:
        raise ValueError("Coulomb projection needs an untwisted periodic grid")
    cur = cfg
    it = 0
    while it < max_iter and norm > tol:
        it += 1
        chi = _solve_laplacian(grid, dstar_A(grid, cur.A))
        for _ in range(30):
            trial = apply_gauge(cur, exp_su2(chi))
            tnorm = _dstar_norm(grid, trial.A)
            if tnorm < norm:
                break
            chi = 0.5 * chi
        else:
            break
        cur, norm = trial, tnorm
        trace.append(norm)
    change = float("nan")
    if p is not None:
        from .energy import energy
        change = energy(cur, p) - energy(cfg, p)
    converged = norm <= tol
    if strict and not converged:
        raise NoConvergence(f"||d*A|| = {norm:.3e} after {it} iterations (tol {tol:.1e})")
    return CoulombResult(cur, norm, it, converged, trace, change)


# ----------------------------------------------------------------------------
# reducible solutions


def reducible_pair(grid):
    """Abelian constant-flux pair on a twisted torus.

    ``A_y = (2 pi n / (Lx Ly)) x T3``, other components zero, ``Phi = T3``,
    where ``n`` is ``grid.twist_n``.  It has ``nabla Phi = 0``, ``|Phi| = 1``
    and ``F = <F, Phi> Phi`` with ``F_xy = 2 pi n / (Lx Ly) T3``.
    """
    if not grid.periodic:
        raise ValueError("reducible_pair needs a periodic grid")
    lx, ly, _ = grid.lengths
    B = 2.0 * np.pi * grid.twist_n / (lx * ly)
    A = grid.zeros_A()
    A[..., 1, 2] = B * grid.coords(0)[:, None, None]
    return G.Configuration.trivial(grid).replace(A=A)

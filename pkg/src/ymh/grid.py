"""Flat 3-domain geometry, field storage and discrete differential operators.

Fields live on the sites of a uniform grid.  Shapes used throughout:

* Higgs field / 0-forms ``(n1, n2, n3, 3)``
* connection / 1-forms ``(n1, n2, n3, 3, 3)`` indexed ``[..., direction, coefficient]``
* 2-forms ``(n1, n2, n3, 3, 3)`` indexed ``[..., pair, coefficient]`` with the
  pairs stored canonically as ``(xy, yz, zx)``
* scalar densities ``(n1, n2, n3)``

Derivatives are centred differences.  On Dirichlet grids the first and last
rows use the one-sided second-order stencil and integrals use trapezoid
weights, so ``integrate(1) == Lx*Ly*Lz``.  ``deriv_adjoint`` is the exact
transpose of ``deriv`` with respect to that weighted pairing, which is what
makes ``codiff_F`` and ``rough_laplacian_phi`` the true discrete adjoints.

Periodic grids may carry an abelian twist: crossing ``x -> x + Lx`` applies
the gauge transition ``u(y) = exp(-2 pi n y / Ly * T3)``, which rotates
adjoint values about ``T3`` by ``2 pi n y / Ly`` and adds ``(2 pi n / Ly) T3``
to ``A_y``.  That hosts constant-flux abelian solutions on the torus.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import su2
from .errors import BallOutOfDomain

PERIODIC = "periodic"
DIRICHLET = "dirichlet"

#: canonical 2-form component order
PAIRS = ((0, 1), (1, 2), (2, 0))
_PAIR_INDEX = {(0, 1): (0, 1.0), (1, 2): (1, 1.0), (2, 0): (2, 1.0),
               (1, 0): (0, -1.0), (2, 1): (1, -1.0), (0, 2): (2, -1.0)}
# (*F)_k = F_ij for (i, j, k) cyclic
_STAR_2_TO_1 = [1, 2, 0]
_STAR_1_TO_2 = [2, 0, 1]


@dataclass(frozen=True)
class Grid:
    """Uniform grid on a flat box.

    ``origin`` is the coordinate of site ``(0, 0, 0)``.  It defaults to 0 on
    periodic grids and to a centred box on Dirichlet grids.
    """

    dims: tuple
    spacing: float
    boundary: str = PERIODIC
    twist_n: int = 0
    origin: tuple = None

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if len(dims) != 3 or min(dims) < 4:
            raise ValueError(f"need three dims >= 4, got {self.dims}")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        if self.boundary not in (PERIODIC, DIRICHLET):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.twist_n and self.boundary != PERIODIC:
            raise ValueError("twist_n requires a periodic grid")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "twist_n", int(self.twist_n))
        if self.origin is None:
            if self.boundary == PERIODIC:
                origin = (0.0, 0.0, 0.0)
            else:
                origin = tuple(-0.5 * (n - 1) * self.spacing for n in dims)
        else:
            origin = tuple(float(o) for o in self.origin)
        object.__setattr__(self, "origin", origin)

    @classmethod
    def cube(cls, n, half_width, boundary=DIRICHLET):
        """Dirichlet cube ``[-half_width, half_width]^3`` with ``n`` sites per side."""
        h = 2.0 * half_width / (n - 1)
        return cls((n, n, n), h, boundary, origin=(-half_width,) * 3)

    @classmethod
    def torus(cls, n, length=1.0, twist_n=0):
        return cls((n, n, n), length / n, PERIODIC, twist_n)

    @property
    def periodic(self):
        return self.boundary == PERIODIC

    @property
    def shape(self):
        return self.dims

    @property
    def lengths(self):
        h = self.spacing
        if self.periodic:
            return tuple(n * h for n in self.dims)
        return tuple((n - 1) * h for n in self.dims)

    @property
    def volume(self):
        lx, ly, lz = self.lengths
        return lx * ly * lz

    def coords(self, axis):
        return self.origin[axis] + self.spacing * np.arange(self.dims[axis])

    @property
    def positions(self):
        """Site coordinates, shape ``(n1, n2, n3, 3)``."""
        x, y, z = np.meshgrid(self.coords(0), self.coords(1), self.coords(2), indexing="ij")
        return np.stack((x, y, z), axis=-1)

    @property
    def bounds(self):
        lo = np.array(self.origin)
        return lo, lo + np.array(self.lengths)

    def axis_weights(self, axis):
        w = np.ones(self.dims[axis])
        if not self.periodic:
            w[0] = w[-1] = 0.5
        return w

    @property
    def weights(self):
        """Quadrature weights per site (trapezoid on Dirichlet grids)."""
        w0, w1, w2 = (self.axis_weights(a) for a in range(3))
        return w0[:, None, None] * w1[None, :, None] * w2[None, None, :]

    @property
    def free_mask(self):
        """Sites whose values are degrees of freedom (not Dirichlet data)."""
        m = np.ones(self.dims, dtype=bool)
        if not self.periodic:
            m[0, :, :] = m[-1, :, :] = False
            m[:, 0, :] = m[:, -1, :] = False
            m[:, :, 0] = m[:, :, -1] = False
        return m

    def interior_mask(self, margin):
        """Sites at least ``margin`` sites away from a Dirichlet face."""
        m = np.ones(self.dims, dtype=bool)
        if not self.periodic and margin > 0:
            m[:margin] = m[-margin:] = False
            m[:, :margin] = m[:, -margin:] = False
            m[:, :, :margin] = m[:, :, -margin:] = False
        return m

    def twist_angle(self):
        """Rotation angle about T3 applied on the x-wrap, one value per y index."""
        ly = self.lengths[1]
        y = self.coords(1)
        return 2.0 * np.pi * self.twist_n * y / ly

    @property
    def twist_shift(self):
        """Coefficient of ``T3`` added to ``A_y`` on the x-wrap."""
        return 2.0 * np.pi * self.twist_n / self.lengths[1]

    def zeros_phi(self):
        return np.zeros(self.dims + (3,))

    def zeros_A(self):
        return np.zeros(self.dims + (3, 3))


def _freeze(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Configuration:
    """A connection ``A`` (su(2)-valued 1-form) and Higgs field ``Phi`` on a grid.

    On Dirichlet grids the boundary-site values are the prescribed closure
    and are held fixed by every flow in this package.
    """

    grid: Grid
    A: np.ndarray
    Phi: np.ndarray

    def __post_init__(self):
        A = _freeze(self.A)
        Phi = _freeze(self.Phi)
        if A.shape != self.grid.dims + (3, 3):
            raise ValueError(f"A has shape {A.shape}, expected {self.grid.dims + (3, 3)}")
        if Phi.shape != self.grid.dims + (3,):
            raise ValueError(f"Phi has shape {Phi.shape}, expected {self.grid.dims + (3,)}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Phi", Phi)

    @classmethod
    def adopt(cls, grid, A, Phi):
        """Wrap freshly built float arrays without copying; they are made read-only."""
        obj = cls.__new__(cls)
        A = np.asarray(A, dtype=float)
        Phi = np.asarray(Phi, dtype=float)
        if A.shape != grid.dims + (3, 3) or Phi.shape != grid.dims + (3,):
            raise ValueError("A and Phi do not match the grid")
        A.setflags(write=False)
        Phi.setflags(write=False)
        object.__setattr__(obj, "grid", grid)
        object.__setattr__(obj, "A", A)
        object.__setattr__(obj, "Phi", Phi)
        return obj

    @classmethod
    def trivial(cls, grid, direction=su2.T3):
        Phi = np.broadcast_to(np.asarray(direction, float), grid.dims + (3,))
        return cls(grid, grid.zeros_A(), Phi)

    def replace(self, A=None, Phi=None):
        return Configuration(self.grid,
                             self.A if A is None else A,
                             self.Phi if Phi is None else Phi)

    def perturbed(self, a, phi, s=1.0):
        return Configuration(self.grid, self.A + s * a, self.Phi + s * phi)

    @cached_property
    def F(self):
        return _curvature(self.grid, self.A)

    @cached_property
    def DPhi(self):
        return _cov_deriv(self.grid, self.A, self.Phi)


# ----------------------------------------------------------------------------
# one-dimensional difference kernels


def _rot3(X, angle):
    """Rotate the su(2) coefficients of ``X`` about T3 by ``angle``."""
    c, s = np.cos(angle), np.sin(angle)
    out = np.empty_like(X)
    out[..., 0] = c * X[..., 0] - s * X[..., 1]
    out[..., 1] = s * X[..., 0] + c * X[..., 1]
    out[..., 2] = X[..., 2]
    return out


def _ghosts(X, grid, axis, shift):
    """Values one site beyond each end of ``axis`` on a periodic grid."""
    ahead = np.take(X, 0, axis=axis)
    behind = np.take(X, -1, axis=axis)
    if axis == 0 and grid.twist_n:
        ang = grid.twist_angle().reshape((-1,) + (1,) * (ahead.ndim - 2))
        ahead = _rot3(ahead, ang)
        if shift is not None:
            behind = behind - shift
        behind = _rot3(behind, -ang)
        if shift is not None:
            ahead = ahead + shift
    return ahead, behind


def deriv(X, grid, axis, shift=None):
    """Centred difference of a site field along ``axis``.

    ``shift`` is the inhomogeneous transition term for connection
    components on a twisted grid (an su(2) triple or ``None``).
    """
    h2 = 2.0 * grid.spacing
    X = np.asarray(X)
    out = np.empty_like(X, dtype=float)
    n = X.shape[axis]

    def sl(a, b=None):
        idx = [slice(None)] * X.ndim
        idx[axis] = slice(a, b) if b is not None or a is None else a
        return tuple(idx)

    out[sl(1, n - 1)] = (X[sl(2, n)] - X[sl(0, n - 2)]) / h2
    if grid.periodic:
        ahead, behind = _ghosts(X, grid, axis, shift)
        out[sl(0)] = (X[sl(1)] - behind) / h2
        out[sl(n - 1)] = (ahead - X[sl(n - 2)]) / h2
    else:
        out[sl(0)] = (-3.0 * X[sl(0)] + 4.0 * X[sl(1)] - X[sl(2)]) / h2
        out[sl(n - 1)] = (3.0 * X[sl(n - 1)] - 4.0 * X[sl(n - 2)] + X[sl(n - 3)]) / h2
    return out


def deriv_adjoint(X, grid, axis):
    """Transpose of ``deriv`` in the weighted site pairing (homogeneous fields)."""
    if grid.periodic:
        return -deriv(X, grid, axis)
    h2 = 2.0 * grid.spacing
    X = np.asarray(X, dtype=float)
    n = X.shape[axis]
    w = grid.axis_weights(axis).reshape((-1,) + (1,) * (X.ndim - axis - 1))
    Y = X * w

    def sl(a, b=None):
        idx = [slice(None)] * X.ndim
        idx[axis] = slice(a, b) if b is not None else a
        return tuple(idx)

    out = np.zeros_like(Y)
    # interior rows r = 1..n-2 put -1 on column r-1 and +1 on column r+1
    out[sl(0, n - 2)] -= Y[sl(1, n - 1)]
    out[sl(2, n)] += Y[sl(1, n - 1)]
    out[sl(0)] += -3.0 * Y[sl(0)]
    out[sl(1)] += 4.0 * Y[sl(0)]
    out[sl(2)] += -1.0 * Y[sl(0)]
    out[sl(n - 3)] += Y[sl(n - 1)]
    out[sl(n - 2)] += -4.0 * Y[sl(n - 1)]
    out[sl(n - 1)] += 3.0 * Y[sl(n - 1)]
    return out / h2 / w


def _A_shift(grid, j):
    if grid.twist_n and j == 1:
        return np.array([0.0, 0.0, grid.twist_shift])
    return None


# ----------------------------------------------------------------------------
# form helpers


def two_form_component(F, i, j):
    """``F_ij`` for an ordered pair from canonical storage."""
    if i == j:
        return np.zeros(F.shape[:-2] + (3,))
    k, sign = _PAIR_INDEX[(i, j)]
    return sign * F[..., k, :]


def star2(F):
    """Hodge star of a 2-form: ``(*F)_k = F_ij`` with ``(i, j, k)`` cyclic."""
    return F[..., _STAR_2_TO_1, :]


def star1(Y):
    """Hodge star of a 1-form, returned in canonical 2-form storage."""
    return Y[..., _STAR_1_TO_2, :]


def form_norm2(X):
    """Pointwise ``sum |X_c|^2`` over the form components (``i<j`` for 2-forms)."""
    return np.einsum("...ck,...ck->...", X, X)


def form_inner(X, Y):
    return np.einsum("...ck,...ck->...", X, Y)


# ----------------------------------------------------------------------------
# operators on raw arrays


def _curvature(grid, A):
    F = np.empty(A.shape)
    dA = {}
    for i, j in PAIRS:
        for a, b in ((i, j), (j, i)):
            if (a, b) not in dA:
                dA[(a, b)] = deriv(A[..., b, :], grid, a, _A_shift(grid, b))
    for k, (i, j) in enumerate(PAIRS):
        F[..., k, :] = dA[(i, j)] - dA[(j, i)] + su2.bracket(A[..., i, :], A[..., j, :])
    return F


def _cov_deriv(grid, A, Phi):
    out = np.empty(A.shape)
    for i in range(3):
        out[..., i, :] = deriv(Phi, grid, i) + su2.bracket(A[..., i, :], Phi)
    return out


def _ext_deriv(grid, A, a):
    """Covariant exterior derivative of an su(2)-valued 1-form ``a``."""
    out = np.empty(a.shape)
    for k, (i, j) in enumerate(PAIRS):
        out[..., k, :] = (deriv(a[..., j, :], grid, i) - deriv(a[..., i, :], grid, j)
                          + su2.bracket(A[..., i, :], a[..., j, :])
                          + su2.bracket(a[..., i, :], A[..., j, :]))
    return out


def _codiff(grid, A, F):
    out = np.zeros(A.shape)
    for j in range(3):
        for i in range(3):
            if i == j:
                continue
            Fij = two_form_component(F, i, j)
            out[..., j, :] += deriv_adjoint(Fij, grid, i) - su2.bracket(A[..., i, :], Fij)
    return out


def _cov_deriv_adjoint(grid, A, Y):
    """Adjoint of ``phi -> D phi + [A, phi]`` applied to an su(2) 1-form ``Y``."""
    out = np.zeros(Y.shape[:-2] + (3,))
    for i in range(3):
        out += deriv_adjoint(Y[..., i, :], grid, i) - su2.bracket(A[..., i, :], Y[..., i, :])
    return out


# ----------------------------------------------------------------------------
# public operators


def curvature(cfg):
    """``F_ij = D_i A_j - D_j A_i + [A_i, A_j]`` as a canonical 2-form."""
    return cfg.F


def cov_deriv(cfg):
    """``(nabla Phi)_i = D_i Phi + [A_i, Phi]``."""
    return cfg.DPhi


def ext_deriv(cfg, a):
    """``d_A a`` for a 1-form perturbation ``a``."""
    return _ext_deriv(cfg.grid, cfg.A, a)


def codiff_F(cfg, F=None):
    """Discrete ``d_A^* F``: the exact adjoint of ``ext_deriv`` in the site pairing."""
    return _codiff(cfg.grid, cfg.A, cfg.F if F is None else F)


def rough_laplacian_phi(cfg):
    """``nabla^* nabla Phi`` (non-negative convention), adjoint-consistent with ``cov_deriv``."""
    return _cov_deriv_adjoint(cfg.grid, cfg.A, cfg.DPhi)


def scalar_laplacian(f, grid):
    """Non-negative Laplacian ``-sum_i D_i D_i f`` built from the same centred differences."""
    return sum(deriv_adjoint(deriv(f, grid, i), grid, i) for i in range(3))


def slab_apply(cfg, fn, slab=32):
    """Evaluate a local per-site map ``fn(cfg) -> array`` slab by slab along x.

    Only Dirichlet grids are split: each slab carries one halo row per side,
    which is discarded, so the result equals ``fn(cfg)`` exactly while the
    temporaries stay small.  Periodic grids and already-cached
    configurations are evaluated in one piece.
    """
    grid = cfg.grid
    n1 = grid.dims[0]
    if grid.periodic or n1 <= slab + 2 or "F" in cfg.__dict__:
        return fn(cfg)
    edges = np.linspace(0, n1, int(np.ceil(n1 / slab)) + 1).round().astype(int)
    parts = []
    x0 = grid.coords(0)
    for i0, i1 in zip(edges[:-1], edges[1:]):
        a, b = max(i0 - 1, 0), min(i1 + 1, n1)
        if b - a < 4:
            a = max(b - 4, 0)
        sub_grid = Grid((b - a,) + grid.dims[1:], grid.spacing, DIRICHLET,
                        origin=(x0[a],) + grid.origin[1:])
        sub = Configuration.adopt(sub_grid, cfg.A[a:b], cfg.Phi[a:b])
        parts.append(fn(sub)[i0 - a:i1 - a])
    return np.concatenate(parts, axis=0)


# ----------------------------------------------------------------------------
# integration


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float


ALL = "all"


def _min_image(d, length):
    return d - length * np.round(d / length)


def ball_mask(grid, ball):
    """Sharp indicator of a ball, after checking that the ball fits the domain."""
    c = np.asarray(ball.center, dtype=float)
    r = float(ball.radius)
    if r <= 0:
        raise BallOutOfDomain("radius must be positive")
    lengths = np.array(grid.lengths)
    if grid.periodic:
        if 2.0 * r >= lengths.min():
            raise BallOutOfDomain(f"ball radius {r} does not fit the periodic box {lengths}")
    else:
        lo, hi = grid.bounds
        if np.any(c - r < lo - 1e-12) or np.any(c + r > hi + 1e-12):
            raise BallOutOfDomain(f"ball at {c} with radius {r} leaves the box [{lo}, {hi}]")
    d2 = np.zeros(grid.dims)
    for ax in range(3):
        d = grid.coords(ax) - c[ax]
        if grid.periodic:
            d = _min_image(d, lengths[ax])
        shape = [1, 1, 1]
        shape[ax] = -1
        d2 = d2 + (d ** 2).reshape(shape)
    return d2 <= r * r


def integrate(field, grid, region=ALL):
    """Quadrature ``sum w h^3 f`` over the domain or a sharp ball."""
    f = np.asarray(field, dtype=float)
    w = grid.weights * grid.spacing ** 3
    if isinstance(region, Ball):
        w = w * ball_mask(grid, region)
    elif region != ALL:
        raise ValueError(f"unknown region {region!r}")
    return float(np.sum(w * f))


def pair(X, Y, grid):
    """Weighted L2 pairing of two site fields of identical shape."""
    prod = np.asarray(X) * np.asarray(Y)
    prod = prod.reshape(grid.dims + (-1,)).sum(axis=-1)
    return integrate(prod, grid)

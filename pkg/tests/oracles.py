"""Independent reference implementations used only by the tests.

Nothing here imports the operators under test; each oracle recomputes a
quantity by a different route (explicit 2x2 matrices, dense stencil
matrices, adaptive quadrature, closed forms).
"""

import numpy as np
from scipy import integrate, linalg

SIGMA = np.array([[[0, 1], [1, 0]],
                  [[0, -1j], [1j, 0]],
                  [[1, 0], [0, -1]]], dtype=complex)
# T_k = i sigma_k / 2 satisfies [T1, T2] = -T3 and <T_j, T_k> = -2 tr(T_j T_k) = delta_jk
T_MATRICES = 0.5j * SIGMA


def to_matrix(c):
    """su(2) coefficient triple(s) -> 2x2 anti-Hermitian matrices."""
    return np.einsum("...k,kab->...ab", np.asarray(c, dtype=complex), T_MATRICES)


def from_matrix(m):
    """Inverse of :func:`to_matrix` via the inner product ``-2 tr(T_k m)``."""
    return np.real(-2.0 * np.einsum("kab,...ba->...k", T_MATRICES, m))


def matrix_bracket(a, b):
    ma, mb = to_matrix(a), to_matrix(b)
    return from_matrix(ma @ mb - mb @ ma)


def matrix_inner(a, b):
    return np.real(-2.0 * np.trace(to_matrix(a) @ to_matrix(b), axis1=-2, axis2=-1))


def quat_to_su2(q):
    """Unit quaternion ``(q0, q)`` -> SU(2) matrix ``q0 + sum_k q_k 2 T_k``."""
    q = np.asarray(q, dtype=float)
    return q[..., 0, None, None] * np.eye(2) + 2.0 * np.einsum("...k,kab->...ab", q[..., 1:] + 0j,
                                                                 T_MATRICES)


def matrix_exp(c):
    return linalg.expm(to_matrix(c))


def matrix_adjoint(q, c):
    g = quat_to_su2(q)
    return from_matrix(g @ to_matrix(c) @ np.conj(np.swapaxes(g, -1, -2)))


# ----------------------------------------------------------------------------
# dense one-dimensional stencils


def dense_derivative(n, h, periodic):
    """Centred difference matrix; one-sided second-order end rows when not periodic."""
    D = np.zeros((n, n))
    for i in range(n):
        if periodic:
            D[i, (i + 1) % n] += 1 / (2 * h)
            D[i, (i - 1) % n] -= 1 / (2 * h)
        elif 0 < i < n - 1:
            D[i, i + 1], D[i, i - 1] = 1 / (2 * h), -1 / (2 * h)
    if not periodic:
        D[0, :3] = np.array([-3, 4, -1]) / (2 * h)
        D[-1, -3:] = np.array([1, -4, 3]) / (2 * h)
    return D


def trapezoid_weights(n, periodic):
    w = np.ones(n)
    if not periodic:
        w[0] = w[-1] = 0.5
    return w


# ----------------------------------------------------------------------------
# hedgehog / BPS


def bps_HK(r):
    """Closed-form BPS profiles at ``eps = 1`` and their r-derivatives."""
    r = np.asarray(r, dtype=float)
    H = r / np.tanh(r) - 1.0
    K = r / np.sinh(r)
    dH = 1.0 / np.tanh(r) - r / np.sinh(r) ** 2
    dK = (np.sinh(r) - r * np.cosh(r)) / np.sinh(r) ** 2
    return H, K, dH, dK


def reduced_density(r, H, K, dH, dK, eps=1.0, lam=0.0):
    """Energy per unit radius of the hedgehog ansatz (already multiplied by 4 pi)."""
    return 4 * np.pi * (2 * eps ** 2 * dK ** 2 + eps ** 2 * (1 - K ** 2) ** 2 / r ** 2
                        + (dH - H / r) ** 2 + 2 * H ** 2 * K ** 2 / r ** 2
                        + lam * r ** 2 / (4 * eps ** 2) * (1 - H ** 2 / r ** 2) ** 2)


def bps_energy_quad(r_max=np.inf):
    """``Int_0^r_max`` of the BPS reduced density by adaptive quadrature."""
    def f(r):
        if r < 1e-6:
            return 0.0
        return reduced_density(r, *bps_HK(r))
    pieces = [0, 1, 5, 20, 60]
    if np.isfinite(r_max):
        pieces = [p for p in pieces if p < r_max] + [r_max]
        tail = 0.0
    else:
        # beyond r = 60 the density is 8 pi / r^2 up to exponentially small terms
        tail = 4 * np.pi * 2.0 / pieces[-1]
    total = sum(integrate.quad(f, a, b, limit=200, epsabs=1e-13, epsrel=1e-13)[0]
                for a, b in zip(pieces[:-1], pieces[1:]))
    return total + tail


def hedgehog_phi(x):
    """Unit hedgehog ``x / |x|``."""
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def signed_solid_angle(a, b, c):
    """Van Oosterom-Strackee solid angle of the spherical triangle ``(a, b, c)``."""
    num = np.linalg.det(np.stack([a, b, c], axis=-2))
    den = 1 + np.sum(a * b, -1) + np.sum(b * c, -1) + np.sum(c * a, -1)
    return 2 * np.arctan2(num, den)


# ----------------------------------------------------------------------------
# sweepout member at y = 0


def _bridge_coefficients():
    """Quintic ``q`` on [0, 1] with ``q = s + O(s^3)`` at 0 and ``q = 1``, ``q' = q'' = 0`` at 1."""
    # unknown coefficients of s^3, s^4, s^5
    M = np.array([[1, 1, 1], [3, 4, 5], [6, 12, 20]], dtype=float)
    rhs = np.array([0.0, -1.0, 0.0])
    return np.linalg.solve(M, rhs)


def rho_quintic(t):
    """Reference cutoff: ``t`` on [0, 2/3], 1 on [1, inf), C^2 quintic bridge between."""
    t = np.asarray(t, dtype=float)
    a3, a4, a5 = _bridge_coefficients()
    s = np.clip(3 * t - 2, 0.0, 1.0)
    bridge = 2 / 3 + (s + a3 * s ** 3 + a4 * s ** 4 + a5 * s ** 5) / 3
    return np.where(t <= 2 / 3, t, np.where(t >= 1, 1.0, bridge))


def sweepout_center_energy(rho, eps, lam, half_width, r_core=1.5):
    """Normalised continuum energy of ``Phi = rho(r/eps) x/r``, ``A = [dPhi, Phi]``, on a cube.

    Inside ``r_core * eps`` the hedgehog reduced density is integrated by
    quadrature with ``H = r rho`` and ``K = 1 - rho^2``; outside, where
    ``rho = 1``, only the monopole curvature ``eps^2 / r^4`` survives and
    its integral over the cube minus the ball is done in spherical
    coordinates using the exit radius ``1 / max|n_i|``.
    """
    def drho(t, d=1e-6):
        return (rho(t + d) - rho(t - d)) / (2 * d)

    def f(r):
        t = r / eps
        g = float(rho(t))
        dg = float(drho(t)) / eps
        return reduced_density(r, r * g, 1 - g * g, g + r * dg, -2 * g * dg, eps, lam)

    knots = [1e-12, 2 * eps / 3, eps, r_core * eps]
    core = sum(integrate.quad(f, a, b, limit=400, epsabs=1e-12, epsrel=1e-11)[0]
               for a, b in zip(knots[:-1], knots[1:]))

    def exit_term(theta, phi):
        n = np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
        return np.abs(n).max() / half_width * np.sin(theta)

    # by symmetry integrate one octant
    octant, _ = integrate.dblquad(exit_term, 0, np.pi / 2, 0, np.pi / 2, epsabs=1e-12, epsrel=1e-10)
    tail = eps ** 2 * (4 * np.pi / (r_core * eps) - 8 * octant)
    return (core + tail) / eps

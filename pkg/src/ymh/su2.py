"""su(2) arithmetic on real coefficient triples.

An element ``c1*T1 + c2*T2 + c3*T3`` is stored as the last axis (length 3)
of a float array, so every function here broadcasts over fields of any
shape.  The basis ``T_k = i*sigma_k/2`` is orthonormal for
``<a, b> = -2 tr(ab)`` and obeys ``[T1, T2] = -T3`` and cyclic, which makes
the bracket the *negated* cross product of coefficient triples.
"""

import numpy as np

from .errors import ZeroHiggs

#: Higgs norms at or below this are treated as zeros of the field.
TOLERANCE_ZERO = 1e-12

T1 = np.array([1.0, 0.0, 0.0])
T2 = np.array([0.0, 1.0, 0.0])
T3 = np.array([0.0, 0.0, 1.0])
BASIS = np.eye(3)


def as_su2(c):
    c = np.asarray(c, dtype=float)
    if c.shape[-1:] != (3,):
        raise ValueError(f"su(2) values need a trailing axis of length 3, got {c.shape}")
    return c


def bracket(a, b):
    """Lie bracket ``[a, b]``; coefficients are ``-(a x b)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a1, a2, a3 = a[..., 0], a[..., 1], a[..., 2]
    b1, b2, b3 = b[..., 0], b[..., 1], b[..., 2]
    return np.stack(
        (a3 * b2 - a2 * b3, a1 * b3 - a3 * b1, a2 * b1 - a1 * b2), axis=-1
    )


def inner(a, b):
    """Invariant inner product ``-2 tr(ab)``, i.e. the coefficient dot product."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.einsum("...k,...k->...", a, b)


def norm2(a):
    return inner(a, a)


def norm(a):
    return np.sqrt(norm2(a))


def split_parallel_perp(xi, phi, tolerance_zero=TOLERANCE_ZERO):
    """Split ``xi`` into parts along and transverse to ``phi``.

    Parameters
    ----------
    xi, phi : array_like, shape (..., 3)
    tolerance_zero : float
        ``phi`` with norm at or below this raises ``ZeroHiggs``.

    Returns
    -------
    par, perp : ndarray
        ``par = |phi|^-2 <xi, phi> phi`` and
        ``perp = |phi|^-2 [phi, [xi, phi]]``; they sum to ``xi``.
    """
    xi = as_su2(xi)
    phi = as_su2(phi)
    p2 = norm2(phi)
    if np.any(np.sqrt(p2) <= tolerance_zero):
        raise ZeroHiggs("Higgs field vanishes (|phi| <= %g)" % tolerance_zero)
    par = (inner(xi, phi) / p2)[..., None] * phi
    perp = bracket(phi, bracket(xi, phi)) / p2[..., None]
    return par, perp

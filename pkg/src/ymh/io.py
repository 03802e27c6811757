"""Binary ``YMH1`` snapshots of a configuration and its couplings.

Layout, all little-endian::

    b"YMH1"
    int64   n1, n2, n3, twist_n, boundary (0 periodic, 1 dirichlet)
    float64 h, epsilon, lambda
    float64 A    (n1, n2, n3, 3, 3)   site-major, C order
    float64 Phi  (n1, n2, n3, 3)

The grid origin is not stored; loading uses the default origin for the
boundary type.
"""

import os

import numpy as np

from . import grid as G
from .energy import EnergyParams
from .errors import BadMagic, DimMismatch, TruncatedFile

MAGIC = b"YMH1"
_INTS = np.dtype("<i8")
_REALS = np.dtype("<f8")
HEADER_BYTES = len(MAGIC) + 5 * 8 + 3 * 8


def _payload_count(dims):
    n = int(np.prod(dims))
    return n * 9, n * 3


def encode(cfg, p):
    """Snapshot bytes for ``cfg`` with couplings ``p``."""
    g = cfg.grid
    flag = 0 if g.periodic else 1
    head = np.array(list(g.dims) + [g.twist_n, flag], dtype=_INTS).tobytes()
    reals = np.array([g.spacing, p.epsilon, p.lam], dtype=_REALS).tobytes()
    body = (np.ascontiguousarray(cfg.A, dtype=_REALS).tobytes()
            + np.ascontiguousarray(cfg.Phi, dtype=_REALS).tobytes())
    return MAGIC + head + reals + body


def decode(buf, expect_dims=None):
    """Inverse of :func:`encode`; returns ``(Configuration, EnergyParams)``.

    Raises
    ------
    BadMagic
        The first four bytes are not ``YMH1``.
    TruncatedFile
        The header or payload is shorter than announced.
    DimMismatch
        Extra trailing bytes, non-positive dims, or dims different from
        ``expect_dims``.
    """
    buf = bytes(buf)
    if buf[:4] != MAGIC:
        raise BadMagic(f"expected magic {MAGIC!r}, found {buf[:4]!r}")
    if len(buf) < HEADER_BYTES:
        raise TruncatedFile(f"header needs {HEADER_BYTES} bytes, file has {len(buf)}")
    ints = np.frombuffer(buf, dtype=_INTS, count=5, offset=4)
    h, eps, lam = np.frombuffer(buf, dtype=_REALS, count=3, offset=44)
    dims = tuple(int(v) for v in ints[:3])
    twist, flag = int(ints[3]), int(ints[4])
    if min(dims) <= 0:
        raise DimMismatch(f"invalid dims {dims}")
    if expect_dims is not None and dims != tuple(expect_dims):
        raise DimMismatch(f"file holds dims {dims}, expected {tuple(expect_dims)}")
    if flag not in (0, 1):
        raise DimMismatch(f"unknown boundary flag {flag}")
    na, nphi = _payload_count(dims)
    need = HEADER_BYTES + 8 * (na + nphi)
    if len(buf) < need:
        raise TruncatedFile(f"payload needs {need} bytes, file has {len(buf)}")
    if len(buf) > need:
        raise DimMismatch(f"{len(buf) - need} trailing bytes after the payload for dims {dims}")
    A = np.frombuffer(buf, dtype=_REALS, count=na, offset=HEADER_BYTES).reshape(dims + (3, 3))
    Phi = np.frombuffer(buf, dtype=_REALS, count=nphi,
                        offset=HEADER_BYTES + 8 * na).reshape(dims + (3,))
    grid = G.Grid(dims, float(h), G.DIRICHLET if flag else G.PERIODIC, twist)
    return G.Configuration(grid, A, Phi), EnergyParams(float(eps), float(lam))


def save_snapshot(cfg, p, path):
    """Write ``cfg`` and ``p`` to ``path`` atomically."""
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(encode(cfg, p))
    os.replace(tmp, path)


def load_snapshot(path, expect_dims=None):
    with open(path, "rb") as fh:
        return decode(fh.read(), expect_dims)

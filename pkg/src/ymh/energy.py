"""The epsilon-scaled Yang-Mills-Higgs energy and its variational calculus.

For a pair ``(A, Phi)`` the energy density is

    e = eps^2 |F|^2 + |nabla Phi|^2 + lam / (4 eps^2) (1 - |Phi|^2)^2

and everything here is computed from the discrete operators in
:mod:`ymh.grid`.  Because ``codiff_F`` and ``rough_laplacian_phi`` are exact
adjoints, :func:`first_variation` is the exact derivative of the discrete
energy along any perturbation that vanishes on Dirichlet faces.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import grid as G
from . import su2
from .errors import NonconformingPerturbation


@dataclass(frozen=True)
class EnergyParams:
    """Coupling constants: length scale ``epsilon > 0`` and ``lam >= 0``.

    ``lam = 0`` is allowed so that the BPS monopole can be used as ground truth.
    """

    epsilon: float
    lam: float = 1.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.lam >= 0:
            raise ValueError(f"lambda must be non-negative, got {self.lam}")
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def mu(self):
        return min(self.lam, 1.0)


CSV_HEADER = "epsilon,lambda,curvature,gradient,potential,total,normalized"


class EnergyReport(NamedTuple):
    curvature_term: float
    gradient_term: float
    potential_term: float
    total: float
    normalized: float

    @classmethod
    def from_terms(cls, curv, grad, pot, epsilon):
        curv, grad, pot = float(curv), float(grad), float(pot)
        total = curv + grad + pot
        return cls(curv, grad, pot, total, total / epsilon)

    def csv_row(self, p):
        vals = (p.epsilon, p.lam, self.curvature_term, self.gradient_term,
                self.potential_term, self.total, self.normalized)
        return ",".join(repr(float(v)) for v in vals)


def w_field(cfg):
    """``w = (1 - |Phi|^2) / 2``."""
    return 0.5 * (1.0 - su2.norm2(cfg.Phi))


def _densities(cfg, p):
    eps2 = p.epsilon ** 2
    curv = eps2 * G.form_norm2(cfg.F)
    grad = G.form_norm2(cfg.DPhi)
    pot = p.lam / eps2 * w_field(cfg) ** 2
    return curv, grad, pot


def energy_density(cfg, p):
    """Pointwise ``e_eps``; non-negative."""
    curv, grad, pot = _densities(cfg, p)
    return curv + grad + pot


def total_energy(cfg, p):
    """Integrate the three energy components separately."""
    g = cfg.grid
    dens = G.slab_apply(cfg, lambda c: np.stack(_densities(c, p), axis=-1))
    curv, grad, pot = (G.integrate(dens[..., k], g) for k in range(3))
    return EnergyReport.from_terms(curv, grad, pot, p.epsilon)


def energy(cfg, p):
    return total_energy(cfg, p).total


def _check_perturbation(cfg, a, phi):
    g = cfg.grid
    a = np.asarray(a, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if a.shape != cfg.A.shape or phi.shape != cfg.Phi.shape:
        raise NonconformingPerturbation(
            f"perturbation shapes {a.shape}, {phi.shape} do not match the grid {g.dims}")
    if not g.periodic:
        fixed = ~g.free_mask
        if np.any(a[fixed] != 0) or np.any(phi[fixed] != 0):
            raise NonconformingPerturbation("perturbation must vanish on Dirichlet boundary sites")
    return a, phi


def first_variation(cfg, p, a, phi):
    """Directional derivative of the energy along ``(a, phi)``.

    Returns ``2 eps^2 <F, d_A a> + 2 <nabla Phi, nabla phi + [a, Phi]>
    + (lam / eps^2) <(|Phi|^2 - 1) Phi, phi>`` in the discrete pairing.
    """
    a, phi = _check_perturbation(cfg, a, phi)
    g = cfg.grid
    eps2 = p.epsilon ** 2
    da = G.ext_deriv(cfg, a)
    dphi = G._cov_deriv(g, cfg.A, phi) + su2.bracket(a, cfg.Phi[..., None, :])
    pot = (-2.0 * w_field(cfg))[..., None] * cfg.Phi
    return (2.0 * eps2 * G.pair(cfg.F, da, g)
            + 2.0 * G.pair(cfg.DPhi, dphi, g)
            + p.lam / eps2 * G.pair(pot, phi, g))


def el_operator(cfg, p):
    """Raw Euler-Lagrange expressions ``(r_A, r_Phi)`` at every site.

    ``r_A = eps^2 d_A^* F - [nabla Phi, Phi]`` and
    ``r_Phi = nabla^* nabla Phi - (lam / 2 eps^2)(1 - |Phi|^2) Phi``.
    """
    eps2 = p.epsilon ** 2
    rA = eps2 * G.codiff_F(cfg) - su2.bracket(cfg.DPhi, cfg.Phi[..., None, :])
    rPhi = G.rough_laplacian_phi(cfg) - (p.lam / eps2 * w_field(cfg))[..., None] * cfg.Phi
    return rA, rPhi


def residual_norm(grid, rA, rPhi):
    """Combined discrete L2 norm of a residual pair."""
    return float(np.sqrt(G.pair(rA, rA, grid) + G.pair(rPhi, rPhi, grid)))


def el_residuals(cfg, p):
    """Euler-Lagrange residuals and their combined norm.

    On Dirichlet grids the residual is reported on free sites only (boundary
    values are data, not unknowns).  The energy gradient is twice the residual.
    """
    rA, rPhi = el_operator(cfg, p)
    g = cfg.grid
    if not g.periodic:
        m = g.free_mask
        rA = rA * m[..., None, None]
        rPhi = rPhi * m[..., None]
    return rA, rPhi, residual_norm(g, rA, rPhi)


def gradient(cfg, p):
    """L2 gradient of the energy, ``(2 r_A, 2 r_Phi)`` on free sites."""
    rA, rPhi, _ = el_residuals(cfg, p)
    return 2.0 * rA, 2.0 * rPhi


class BogomolnySplit(NamedTuple):
    topological: float
    defect: float
    potential: float

    @property
    def total(self):
        return self.topological + self.defect + self.potential


def charge_density(cfg):
    """``<*F, nabla Phi>`` per site."""
    return G.form_inner(G.star2(cfg.F), cfg.DPhi)


def bogomolny_split(cfg, p, sign=1):
    """Energy as ``+-8 pi k eps + ||eps F -+ *nabla Phi||^2 + potential``.

    The split holds pointwise, so the three parts sum to the total energy up
    to rounding; ``k`` is the volume charge over the whole domain.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    g = cfg.grid
    eps = p.epsilon
    top = sign * 2.0 * eps * G.integrate(charge_density(cfg), g)
    diff = eps * cfg.F - sign * G.star1(cfg.DPhi)
    defect = G.integrate(G.form_norm2(diff), g)
    pot = G.integrate(p.lam / eps ** 2 * w_field(cfg) ** 2, g)
    return BogomolnySplit(top, defect, pot)


def _longitudinal_F2(cfg):
    """``|<F, Phi>|^2`` summed over the 2-form components."""
    return np.sum(su2.inner(cfg.F, cfg.Phi[..., None, :]) ** 2, axis=-1)


def _commutator_F2(cfg):
    return G.form_norm2(su2.bracket(cfg.F, cfg.Phi[..., None, :]))


def diagnostic_xi(cfg, p, both=False):
    """``xi = eps^-1 e - eps |<F, Phi>|^2`` via its algebraic expansion.

    The expansion is ``2 w eps |F|^2 + eps^-1 |nabla Phi|^2 + lam eps^-3 w^2
    + eps |[F, Phi]|^2``.  With ``both=True`` the direct definition is also
    returned so the two can be compared.
    """
    eps = p.epsilon
    w = w_field(cfg)
    F2 = G.form_norm2(cfg.F)
    expansion = (2.0 * w * eps * F2 + G.form_norm2(cfg.DPhi) / eps
                 + p.lam * w ** 2 / eps ** 3 + eps * _commutator_F2(cfg))
    if not both:
        return expansion
    direct = energy_density(cfg, p) / eps - eps * _longitudinal_F2(cfg)
    return expansion, direct


def w_identity_defect(cfg, p):
    """Pointwise ``Delta w - |nabla Phi|^2 + (lam w / eps^2) |Phi|^2``.

    ``Delta`` is the non-negative Laplacian built by applying the centred
    difference twice.  The defect vanishes (to discretisation error) only at
    critical points.
    """
    g = cfg.grid
    w = w_field(cfg)
    lap = -sum(G.deriv(G.deriv(w, g, i), g, i) for i in range(3))
    return lap - G.form_norm2(cfg.DPhi) + p.lam / p.epsilon ** 2 * w * su2.norm2(cfg.Phi)


def verify_w_identity(cfg, p, margin=2):
    """L2 norm of :func:`w_identity_defect` over sites ``margin`` away from Dirichlet faces."""
    g = cfg.grid
    d = w_identity_defect(cfg, p) * g.interior_mask(margin)
    return float(np.sqrt(G.integrate(d * d, g)))


class PsiTheta(NamedTuple):
    psi0: np.ndarray
    theta0: np.ndarray
    psi0_perp: np.ndarray
    perp_defined: np.ndarray


def psi_theta_densities(cfg, p, tolerance_zero=su2.TOLERANCE_ZERO):
    """``Psi_0``, ``Theta_0`` and ``Psi_0^perp`` per site.

    ``Psi_0^perp = |Phi|^-1 Theta_0`` is only defined where
    ``|Phi| > tolerance_zero``; elsewhere it is 0 and ``perp_defined`` is False.
    """
    eps2 = p.epsilon ** 2
    psi0 = np.sqrt(eps2 * G.form_norm2(cfg.F) + G.form_norm2(cfg.DPhi))
    comm_dphi = su2.bracket(cfg.DPhi, cfg.Phi[..., None, :])
    theta0 = np.sqrt(eps2 * _commutator_F2(cfg) + G.form_norm2(comm_dphi))
    mod = su2.norm(cfg.Phi)
    ok = mod > tolerance_zero
    perp = np.zeros_like(theta0)
    perp[ok] = theta0[ok] / mod[ok]
    return PsiTheta(psi0, theta0, perp, ok)

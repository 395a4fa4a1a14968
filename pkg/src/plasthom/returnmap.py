"""Element-wise backward-Euler plastic update (radial return) and tangent.

For shear-isotropic elasticity and scalar kinematic hardening the implicit
flow-rule update decouples into a hydrostatic part that stays elastic and a
deviatoric part whose magnitude solves a scalar equation with a closed-form
root.  Everything is vectorized over elements.

Unknowns per element, given the total driving strain xi and the previous
plastic strain p_old:

    z = A (xi - p),    p = p_old + dt * dPsi^delta(z - H p),

where A has deviatoric eigenvalue a_dev = 2 mu and volumetric eigenvalue
a_vol, and the regularized flow direction is radial in dev(z - H p).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .flowrules import NORM_TYPE, VON_MISES
from .tensors import deviatoric, dev_projector, mandel_dim


@dataclass(frozen=True)
class MaterialArrays:
    """Per-element isotropic material data for the vectorized update."""

    a_vol: np.ndarray    # volumetric stiffness eigenvalue, d*lam + 2*mu
    a_dev: np.ndarray    # deviatoric stiffness eigenvalue, 2*mu
    hardening: np.ndarray
    yield_stress: np.ndarray
    dim: int = 2

    @classmethod
    def from_parameters(cls, E, nu, sigma_y, hardening, dim=2):
        E = np.atleast_1d(np.asarray(E, dtype=float))
        nu = np.atleast_1d(np.asarray(nu, dtype=float))
        lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
        mu = E / (2.0 * (1.0 + nu))
        return cls(
            a_vol=dim * lam + 2.0 * mu,
            a_dev=2.0 * mu,
            hardening=np.broadcast_to(np.asarray(hardening, dtype=float), E.shape).copy(),
            yield_stress=np.broadcast_to(np.asarray(sigma_y, dtype=float), E.shape).copy(),
            dim=dim,
        )

    @classmethod
    def from_medium(cls, medium, points, eps=1.0):
        params = medium.parameters_at(points, eps)
        return cls.from_parameters(params["E"], params["nu"], params["sigma_y"],
                                   params["H"], dim=medium.dim)

    def validate_elliptic(self):
        if np.any(self.a_vol <= 0) or np.any(self.a_dev <= 0):
            raise ConfigurationError("material field violates ellipticity")
        if np.any(self.hardening <= 0) or np.any(self.yield_stress <= 0):
            raise ConfigurationError("hardening and yield stress must be positive")

    def stiffness_moduli(self):
        """Dense Mandel stiffness matrices per element, shape (n, k, k)."""
        k = mandel_dim(self.dim)
        e = np.zeros(k)
        e[: self.dim] = 1.0
        sph = np.outer(e, e) / self.dim
        dev = np.eye(k) - sph
        return self.a_vol[:, None, None] * sph + self.a_dev[:, None, None] * dev

    def apply_stiffness(self, comps):
        sph = np.zeros_like(comps)
        tr = comps[..., : self.dim].sum(axis=-1) / self.dim
        sph[..., : self.dim] = tr[..., None]
        return self.a_vol[:, None] * sph + self.a_dev[:, None] * (comps - sph)

    def apply_compliance(self, comps):
        sph = np.zeros_like(comps)
        tr = comps[..., : self.dim].sum(axis=-1) / self.dim
        sph[..., : self.dim] = tr[..., None]
        return sph / self.a_vol[:, None] + (comps - sph) / self.a_dev[:, None]

    @classmethod
    def elastic_limit(cls, other, big=1e9):
        """Same elasticity with an unreachable yield surface (elastic solve)."""
        return cls(other.a_vol, other.a_dev, other.hardening,
                   np.full_like(other.yield_stress, big), dim=other.dim)


def _flow_increment(kind, s_trial, c_ratio, dt, delta, sigma_y):
    """Plastic multiplier lambda and its derivative w.r.t. |dev tau_trial|.

    Solves s = s_trial - (a_dev + H) * dt * g(s) in closed form, where g is
    the regularized flow magnitude, and returns lambda = dt * g(s).
    ``c_ratio`` is (a_dev + H) * dt.
    """
    if kind == VON_MISES:
        denom = delta + c_ratio
        lam = np.maximum(s_trial - sigma_y, 0.0) * (dt / denom)
        dlam = np.where(s_trial > sigma_y, dt / denom, 0.0)
        return lam, dlam
    if kind == NORM_TYPE:
        threshold = sigma_y * (delta + c_ratio)
        inner = s_trial <= threshold
        lam = np.where(inner, s_trial * (dt / (delta + c_ratio)), dt * sigma_y)
        dlam = np.where(inner, dt / (delta + c_ratio), 0.0)
        return lam, dlam
    raise ConfigurationError(f"unknown flow rule kind {kind!r}")


def plastic_step(xi_total, p_old, mats, dt, delta, kind=VON_MISES, tangent=True):
    """One implicit flow-rule update for all elements at once.

    Parameters
    ----------
    xi_total : (n, k) total driving strains (boundary strain plus corrector).
    p_old : (n, k) previous plastic strains (deviatoric).
    mats : MaterialArrays.
    dt, delta : time step and regularization.
    tangent : also return the consistent algorithmic moduli (n, k, k).

    Returns
    -------
    z, p_new, moduli (or None): stresses, updated plastic strains, tangents.
    """
    d = mats.dim
    dev_xi = deviatoric(xi_total, d)
    sph_xi = xi_total - dev_xi

    hard = mats.a_dev + mats.hardening
    s_vec = mats.a_dev[:, None] * dev_xi - hard[:, None] * p_old
    s_trial = np.linalg.norm(s_vec, axis=-1)

    lam, dlam = _flow_increment(kind, s_trial, hard * dt, dt, delta, mats.yield_stress)
    safe = np.where(s_trial > 0.0, s_trial, 1.0)
    n_dir = s_vec / safe[:, None]
    p_new = p_old + lam[:, None] * n_dir

    z = mats.a_vol[:, None] * sph_xi + mats.a_dev[:, None] * (dev_xi - p_new)

    if not tangent:
        return z, p_new, None

    k = mandel_dim(d)
    e = np.zeros(k)
    e[:d] = 1.0
    sph_proj = np.outer(e, e) / d
    dev_proj = dev_projector(d)
    moduli = (mats.a_vol[:, None, None] * sph_proj
              + mats.a_dev[:, None, None] * dev_proj)
    active = lam > 0.0
    if np.any(active):
        nn = np.einsum("ei,ej->eij", n_dir, n_dir)
        radial = (mats.a_dev**2 * dlam)[:, None, None] * nn
        hoop = (mats.a_dev**2 * lam / safe)[:, None, None] * (dev_proj - nn)
        moduli = moduli - np.where(active[:, None, None], radial + hoop, 0.0)
    return z, p_new, moduli

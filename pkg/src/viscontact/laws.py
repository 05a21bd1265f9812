"""Contact bound functions, friction potentials, and the boundary functional.

The contact superpotential at a boundary point x with prior displacement
trace eta and velocity trace xi is

    j(x, eta, xi) = g_nu(x, eta_nu) * xi_nu + g_tau(x, eta_nu) * j_tau(|xi_tau|)

with the normal pointing out of the body, nu = (0, -1). The normal term
models a compliant foundation whose pressure is a clamped ramp in the
penetration; the tangential term is a friction dissipation density whose
bound scales the potential j_tau.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fem import CONTACT_NORMAL, ContactSamples
from .mesh import Mesh


@dataclass(frozen=True)
class BoundFunction:
    """Clamped ramp in the penetration, optionally zeroed on part of the edge.

    Value is 0 for eta <= 0, slope * eta up to the cap, and slope * eta_cap
    beyond. Where the first coordinate is at least ``zero_from_x`` the bound
    vanishes identically (used for the lubricated half of the boundary).
    """

    slope: float
    eta_cap: float
    zero_from_x: float = math.inf

    @property
    def value_cap(self) -> float:
        return self.slope * self.eta_cap

    def __call__(self, x1, eta):
        v = self.slope * np.clip(eta, 0.0, self.eta_cap)
        return np.where(np.asarray(x1) >= self.zero_from_x, 0.0, v)


@dataclass(frozen=True)
class FrictionPotential:
    """One-dimensional dissipation profile r -> exp_coef * e^{-r} + lin_coef * r.

    ``r`` is the tangential speed. The shipped variants are the exp-norm
    profile (-0.3, 0.7), nondifferentiable and nonconvex through the norm,
    and the plain norm (0, 1). Both are 1-Lipschitz for |exp_coef| <= lin_coef
    and admit one-sided directional difference quotients everywhere.
    """

    exp_coef: float
    lin_coef: float

    def __call__(self, r):
        r = np.asarray(r, dtype=np.float64)
        return self.exp_coef * np.exp(-r) + self.lin_coef * r


EXP_NORM = FrictionPotential(exp_coef=-0.3, lin_coef=0.7)
NORM = FrictionPotential(exp_coef=0.0, lin_coef=1.0)


@dataclass(frozen=True)
class ContactLaw:
    """Normal compliance bound, friction bound, and friction potential."""

    g_nu: BoundFunction
    g_tau: BoundFunction
    j_tau: FrictionPotential


def eval_j(law: ContactLaw, x1: float, eta, xi) -> float:
    """Pointwise superpotential density at a contact point.

    Parameters
    ----------
    law : ContactLaw
    x1 : float
        First coordinate of the boundary point.
    eta, xi : array_like, shape (2,)
        Prior displacement trace and velocity trace at the point.
    """
    eta = np.asarray(eta, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    eta_nu = float(eta @ CONTACT_NORMAL)
    xi_nu = float(xi @ CONTACT_NORMAL)
    xi_tau = xi - xi_nu * CONTACT_NORMAL
    r = float(np.linalg.norm(xi_tau))
    gn = float(law.g_nu(x1, eta_nu))
    gt = float(law.g_tau(x1, eta_nu))
    return gn * xi_nu + gt * float(law.j_tau(r))


def eval_J(law: ContactLaw, mesh: Mesh, prior: ContactSamples, vel: ContactSamples) -> float:
    """Boundary functional: quadrature of eval_j over the contact edge.

    ``prior`` carries the displacement trace that sets the bounds, ``vel``
    the velocity trace the functional acts on. Both must come from the same
    quadrature layout.
    """
    if prior.n_points != vel.n_points:
        raise ValueError("prior and velocity traces have different sample counts")
    if prior.n_points != 3 * mesh.contact_edges.shape[0]:
        raise ValueError("sample layout does not match the mesh contact edges")
    if not (np.array_equal(prior.x, vel.x) and np.array_equal(prior.w, vel.w)):
        raise ValueError("prior and velocity traces use different sample points")
    gn = law.g_nu(prior.x, prior.u_nu)
    gt = law.g_tau(prior.x, prior.u_nu)
    r = np.hypot(vel.u_tau[:, 0], vel.u_tau[:, 1])
    dens = gn * vel.u_nu + gt * law.j_tau(r)
    return float(np.sum(prior.w * dens))


def greased_g_tau(x1, eta):
    """Friction bound that vanishes on the right half of the contact edge."""
    return catalog("greased").g_tau(x1, eta)


_BASE_BOUND = BoundFunction(slope=30.0, eta_cap=0.1)

_CATALOG = {
    "base": ContactLaw(g_nu=_BASE_BOUND, g_tau=_BASE_BOUND, j_tau=EXP_NORM),
    "stiff_gnu": ContactLaw(
        g_nu=BoundFunction(slope=200.0, eta_cap=0.1),
        g_tau=_BASE_BOUND,
        j_tau=EXP_NORM,
    ),
    "reversed_f0": ContactLaw(g_nu=_BASE_BOUND, g_tau=_BASE_BOUND, j_tau=EXP_NORM),
    "greased": ContactLaw(
        g_nu=_BASE_BOUND,
        g_tau=BoundFunction(slope=30.0, eta_cap=0.1, zero_from_x=0.5),
        j_tau=EXP_NORM,
    ),
    "convergence": ContactLaw(
        g_nu=BoundFunction(slope=60.0, eta_cap=0.1),
        g_tau=BoundFunction(slope=120.0, eta_cap=0.1),
        j_tau=NORM,
    ),
}


def catalog(name: str) -> ContactLaw:
    """Named law sets used by the experiments."""
    try:
        return _CATALOG[name]
    except KeyError:
        raise KeyError(
            f"unknown law set {name!r}; available: {sorted(_CATALOG)}"
        ) from None

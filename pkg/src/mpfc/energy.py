"""Discrete energies and the second-order dissipation identity."""

from dataclasses import dataclass, field

import numpy as np

from .elliptic import EllipticConfig, hminus_norm, project_mean_zero
from .grid import grad_norm2, inner_cell, laplacian, norm


@dataclass(frozen=True)
class Params:
    """Model and time-step constants; ``alpha = 1 - epsilon`` is derived."""

    M: float = 1.0
    epsilon: float = 0.025
    beta: float = 0.9
    s: float = 0.1
    alpha: float = field(init=False)

    def __post_init__(self):
        if not self.M > 0:
            raise ValueError(f"mobility M must be positive, got {self.M}")
        if not self.s > 0:
            raise ValueError(f"time step s must be positive, got {self.s}")
        if self.epsilon > 1:
            raise ValueError(f"epsilon must not exceed 1, got {self.epsilon}")
        if self.beta < 0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")
        object.__setattr__(self, "alpha", 1.0 - self.epsilon)

    def with_step(self, s):
        return Params(self.M, self.epsilon, self.beta, s)


@dataclass(frozen=True)
class EnergyReport:
    f: float
    fc: float
    fe: float
    pseudo: float
    modified: float
    mass: float
    psi_mean: float


def pinning_energy(phi, pin):
    """``h^2 sum W (phi - phi_hat)^2``; zero when no pinning is active."""
    if pin is None or not pin.active:
        return 0.0
    d = phi - pin.target
    return inner_cell(pin.weight * d, d)


def energy_split(phi, params, pin=None):
    """Return ``(Fc, Fe, F)`` for the convex splitting ``F = Fc - Fe``.

    An active pinning penalty is convex and is counted in ``Fc``.
    """
    fc = (0.25 * norm(phi, 4) ** 4 + 0.5 * params.alpha * norm(phi) ** 2
          + 0.5 * norm(laplacian(phi)) ** 2 + pinning_energy(phi, pin))
    fe = grad_norm2(phi) ** 2
    return fc, fe, fc - fe


def _kinetic(psi, params, cfg, project):
    if project:
        psi = project_mean_zero(psi)
    return hminus_norm(psi, cfg) ** 2 / (2.0 * params.M)


def pseudo_energy(phi, psi, params, cfg=None, pin=None, project=False):
    """``F(phi) + ||psi||_{-1}^2 / (2M)``.

    ``project=True`` drops the (roundoff-level) mean of ``psi`` before
    taking the ``-1`` norm instead of rejecting it.
    """
    cfg = cfg or EllipticConfig()
    return energy_split(phi, params, pin)[2] + _kinetic(psi, params, cfg, project)


def modified_pseudo_energy(phi, phi_prev, psi, params, cfg=None, pin=None, project=False):
    cfg = cfg or EllipticConfig()
    return (pseudo_energy(phi, psi, params, cfg, pin, project)
            + 0.5 * grad_norm2(phi - phi_prev) ** 2)


def energy_report(state, params, cfg=None, pin=None, hminus=True, project=True):
    """All energies of a scheme state; ``hminus=False`` skips the Poisson solve."""
    cfg = cfg or EllipticConfig()
    fc, fe, f = energy_split(state.phi, params, pin)
    kinetic = _kinetic(state.psi, params, cfg, project) if hminus else np.nan
    pseudo = f + kinetic
    modified = pseudo + 0.5 * grad_norm2(state.phi - state.phi_prev) ** 2
    h2 = state.spec.h ** 2
    return EnergyReport(f=f, fc=fc, fe=fe, pseudo=pseudo, modified=modified,
                        mass=h2 * float(np.sum(state.phi.interior)),
                        psi_mean=h2 * float(np.sum(state.psi.interior)))


def dissipation_terms(prev, nxt, params, cfg=None, pin=None, project=True):
    """Left- and right-hand sides of the second-order energy identity.

    LHS = Ft(k+1) + s (beta/M) ||psi^{k+1/2}||_{-1}^2 + (s^4/2) ||grad D2 phi||^2
    RHS = Ft(k)
    """
    cfg = cfg or EllipticConfig()
    s = params.s
    lhs_f = modified_pseudo_energy(nxt.phi, nxt.phi_prev, nxt.psi, params, cfg, pin, project)
    rhs_f = modified_pseudo_energy(prev.phi, prev.phi_prev, prev.psi, params, cfg, pin, project)
    half = 0.5 * (nxt.psi + prev.psi)
    if project:
        half = project_mean_zero(half)
    damping = s * params.beta / params.M * hminus_norm(half, cfg) ** 2
    d2 = (nxt.phi - 2.0 * prev.phi + prev.phi_prev) / (s * s)
    accel = 0.5 * s ** 4 * grad_norm2(d2) ** 2
    return lhs_f + damping + accel, rhs_f


def dissipation_residual(prev, nxt, params, cfg=None, pin=None, project=True):
    """``|LHS - RHS|`` of the identity for consecutive second-order states."""
    lhs, rhs = dissipation_terms(prev, nxt, params, cfg, pin, project)
    return abs(lhs - rhs)

"""First- and second-order convex-splitting time integrators.

Both schemes reduce each step to a nonlinear system ``N(u) = S`` in the
unknowns ``u = (phi, mu, kappa)``, solved by FAS multigrid, after which the
velocity ``psi`` is recovered explicitly.
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np

from .energy import EnergyReport, energy_report
from .errors import NoConvergence
from .grid import CellField, GridSpec, laplacian, norm
from .multigrid import MgConfig, MgHierarchy, SolveResult, solve_to_tolerance


class Scheme(str, Enum):
    FIRST = "first"
    SECOND = "second"


@dataclass(frozen=True)
class SchemeState:
    phi: CellField
    phi_prev: CellField
    psi: CellField
    k: int = 0
    t: float = 0.0

    @classmethod
    def initial(cls, phi0):
        """Step-zero state: ``psi = 0`` and ``phi_prev = phi``."""
        return cls(phi=phi0.copy(), phi_prev=phi0.copy(), psi=CellField(phi0.spec))

    @property
    def spec(self):
        return self.phi.spec


@dataclass
class PinningSpec:
    """Quadratic penalty ``W (phi - target)^2`` added to the free energy."""

    weight: CellField
    target: CellField
    active: bool = True

    def __post_init__(self):
        if np.any(self.weight.interior < 0):
            raise ValueError("pinning weight must be non-negative")
        if self.weight.spec != self.target.spec:
            raise ValueError("pinning weight and target must share a grid")


@dataclass
class NonlinearSystem:
    """Coefficients, frozen data and source of ``N(u) = S`` for one step."""

    scheme: Scheme
    spec: GridSpec
    a: float
    c3: float
    frozen: CellField
    lin: CellField
    source: tuple
    params: object = None
    guess: Optional[CellField] = None

    @property
    def order(self):
        return 1 if self.scheme is Scheme.FIRST else 2


def _pin_active(pin):
    return pin is not None and pin.active


def assemble_first(state, params, pin=None):
    s, M, beta, alpha = params.s, params.M, params.beta, params.alpha
    spec = state.spec
    d = beta + 1.0 / s
    s1 = state.phi + state.psi / d
    s2 = 2.0 * laplacian(state.phi)
    s3 = CellField(spec)
    lin = CellField.constant(spec, alpha)
    if _pin_active(pin):
        # mu gains 2 W (phi - target), fully implicit
        lin = lin + 2.0 * pin.weight
        s2 = s2 - 2.0 * pin.weight * pin.target
    return NonlinearSystem(Scheme.FIRST, spec, s * M / d, 1.0, state.phi.copy(), lin,
                           (s1, s2, s3), params)


def assemble_second(state, params, pin=None):
    s, M, beta, alpha = params.s, params.M, params.beta, params.alpha
    spec = state.spec
    d = beta + 2.0 / s
    extrap = 0.5 * (3.0 * state.phi - state.phi_prev)
    s1 = state.phi + 2.0 * state.psi / d
    s2 = 0.5 * alpha * state.phi + 2.0 * laplacian(extrap)
    s3 = 0.5 * laplacian(state.phi)
    lin = CellField.constant(spec, 0.5 * alpha)
    if _pin_active(pin):
        # mu gains 2 W (phi^{k+1/2} - target) = W phi + W (phi_k - 2 target)
        lin = lin + pin.weight
        s2 = s2 + pin.weight * (state.phi - 2.0 * pin.target)
    return NonlinearSystem(Scheme.SECOND, spec, s * M / d, 0.5, state.phi.copy(), lin,
                           (s1, s2, s3), params)


def assemble(scheme, state, params, pin=None):
    """Build the step system; the initial iterate extrapolates ``2 phi_k - phi_{k-1}``."""
    scheme = Scheme(scheme)
    if scheme is Scheme.FIRST:
        sys = assemble_first(state, params, pin)
    else:
        sys = assemble_second(state, params, pin)
    sys.guess = 2.0 * state.phi - state.phi_prev
    return sys


def finalize_first(phi_new, state, params):
    psi = (phi_new - state.phi) / params.s
    return SchemeState(phi_new, state.phi.copy(), psi, state.k + 1, (state.k + 1) * params.s)


def finalize_second(phi_new, state, params):
    psi = (2.0 / params.s) * (phi_new - state.phi) - state.psi
    return SchemeState(phi_new, state.phi.copy(), psi, state.k + 1, (state.k + 1) * params.s)


def finalize(scheme, phi_new, state, params):
    if Scheme(scheme) is Scheme.FIRST:
        return finalize_first(phi_new, state, params)
    return finalize_second(phi_new, state, params)


def solver_slack(tol, phi, mu):
    """Energy/mass tolerance attributable to an inexact algebraic solve."""
    return 10.0 * tol * (norm(phi) + norm(mu))


@dataclass
class StepDiagnostics:
    vcycles: int
    residual: float
    history: list
    mu: CellField
    energy: Optional[EnergyReport] = None
    slack: float = 0.0


def advance(state, params, scheme=Scheme.SECOND, pin=None, mg_cfg=None, hierarchy=None):
    """Assemble, solve and finalise one step.

    Returns the new state and the multigrid :class:`SolveResult`.
    """
    sys = assemble(scheme, state, params, pin)
    if hierarchy is None:
        hierarchy = MgHierarchy(state.spec, mg_cfg)
    try:
        result = solve_to_tolerance(sys, hierarchy=hierarchy)
    except NoConvergence as exc:
        raise NoConvergence(f"step {state.k + 1}: {exc}", history=exc.history,
                            step=state.k + 1) from exc
    return finalize(scheme, result.u[0], state, params), result


def step(state, params, scheme=Scheme.SECOND, pin=None, mg_cfg=None, hierarchy=None,
         ell_cfg=None, hminus=True):
    """Advance one step and report solver and energy diagnostics."""
    if hierarchy is None:
        hierarchy = MgHierarchy(state.spec, mg_cfg)
    new, result = advance(state, params, scheme, pin, hierarchy=hierarchy)
    report = energy_report(new, params, ell_cfg, pin, hminus=hminus)
    diag = StepDiagnostics(vcycles=result.cycles, residual=result.residual,
                           history=result.history, mu=result.u[1], energy=report,
                           slack=solver_slack(hierarchy.cfg.tol, new.phi, result.u[1]))
    return new, diag


class Integrator:
    """Convenience wrapper owning a hierarchy for repeated steps."""

    def __init__(self, spec, params, scheme=Scheme.SECOND, pin=None, mg_cfg=None,
                 ell_cfg=None):
        self.params = params
        self.scheme = Scheme(scheme)
        self.pin = pin
        self.hierarchy = MgHierarchy(spec, mg_cfg)
        self.ell_cfg = ell_cfg

    @property
    def mg_cfg(self):
        return self.hierarchy.cfg

    def advance(self, state):
        return advance(state, self.params, self.scheme, self.pin, hierarchy=self.hierarchy)

    def step(self, state, hminus=True):
        return step(state, self.params, self.scheme, self.pin, hierarchy=self.hierarchy,
                    ell_cfg=self.ell_cfg, hminus=hminus)

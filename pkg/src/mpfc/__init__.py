"""Finite-difference solver for the modified phase field crystal equation.

Two convex-splitting time integrators (first and second order) reduce each
step to a nonlinear three-field system that is solved by FAS multigrid on
a cell-centred grid with periodic or homogeneous Neumann boundaries.
"""

__version__ = "0.1.0"

from .elliptic import EllipticConfig, hminus_inner, hminus_norm, inv_laplacian
from .energy import Params, energy_report, energy_split, pseudo_energy
from .errors import (ComplexAmplitude, DomainMismatch, GridMismatch, MPFCError,
                     NoConvergence, NonZeroMean, SingularLocalSystem)
from .grid import BC, CellField, GridSpec
from .multigrid import Linearization, MgConfig, solve_to_tolerance
from .scheme import Integrator, PinningSpec, Scheme, SchemeState, advance, step

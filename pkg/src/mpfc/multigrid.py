"""Nonlinear FAS multigrid for the three-field systems ``N(u) = S``.

The unknown is the triple ``u = (phi, mu, kappa)``.  A system object (see
:class:`mpfc.scheme.NonlinearSystem`) supplies the operator coefficients, the
frozen data entering ``N`` and the source ``S``; the operator itself is

    N1 = phi - a lap(mu)
    N2 = mu - g(phi; phi_k) - lin phi - lap(kappa)
    N3 = kappa - c3 lap(phi)

with ``g = phi**3`` for the first-order scheme and the secant form
``(phi**2 + phi_k**2)(phi + phi_k) / 4`` for the second-order one.

Coarse levels rediscretise the same operator with doubled ``h`` and
cell-averaged frozen data; the smoother is nonlinear red-black Gauss-Seidel
with a Cramer's-rule solve of the local 3x3 system in every cell.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import _kernels
from .errors import NoConvergence, SingularLocalSystem
from .grid import CellField, fill_ghosts


class Linearization(str, Enum):
    PICARD = "picard"
    NEWTON = "newton"


@dataclass(frozen=True)
class MgConfig:
    """V-cycle controls.

    ``l_max`` smoothing passes before and after each coarse correction,
    ``coarse_passes`` passes on the coarsest level, which is reached when
    a further halving would drop below ``coarsest`` cells or make a
    dimension odd.  ``coarse_solver="newton"`` solves the coarsest
    problem with sparse Newton iterations instead (``"smooth"`` applies
    ``coarse_passes`` smoothing passes).  ``relaxation`` is the weight of
    the collective Gauss-Seidel update; ``"auto"`` picks it per level with
    :func:`auto_relaxation`.
    """

    l_max: int = 1
    tol: float = 1e-9
    max_vcycles: int = 100
    coarsest: int = 4
    coarse_passes: int = 50
    linearization: Linearization = Linearization.PICARD
    abs_floor: float = 1e-14
    relaxation: object = "auto"
    coarse_solver: str = "newton"

    def __post_init__(self):
        object.__setattr__(self, "linearization", Linearization(self.linearization))
        if self.coarse_solver not in ("newton", "smooth"):
            raise ValueError(f"coarse_solver must be 'newton' or 'smooth', got {self.coarse_solver!r}")
        if self.relaxation != "auto" and not 0.0 < float(self.relaxation) <= 1.0:
            raise ValueError(f"relaxation must be 'auto' or lie in (0, 1], got {self.relaxation}")
        if self.l_max < 1:
            raise ValueError("l_max must be at least 1")
        if not 0.0 < self.tol < 1.0:
            raise ValueError(f"tol must lie in (0, 1), got {self.tol}")
        if self.coarsest < 2:
            raise ValueError("coarsest must be at least 2")
        if self.max_vcycles < 1:
            raise ValueError("max_vcycles must be at least 1")


# Window of the coupling number r = (a c3)^(1/3) / h^2 in which plain
# collective Gauss-Seidel smooths poorly, and the weight used inside it.
RELAX_WINDOW = (0.15, 0.8)
RELAX_WEIGHT = 0.8


def coupling_number(a, c3, h):
    """Size of the cyclic phi -> mu -> kappa neighbour coupling relative to the diagonal."""
    return (abs(a) * abs(c3)) ** (1.0 / 3.0) / (h * h)


def auto_relaxation(a, c3, h):
    """Relaxation weight for one level.

    The neighbour coupling of the three-field system is cyclic, so its
    Fourier symbol has the cube roots of unity as phases.  For ``r`` of
    order one the complex pair makes point Gauss-Seidel amplify part of the
    oscillatory spectrum; a mild under-relaxation restores smoothing there
    and is unnecessary elsewhere.
    """
    lo, hi = RELAX_WINDOW
    r = coupling_number(a, c3, h)
    return RELAX_WEIGHT if lo <= r <= hi else 1.0


def laplacian_matrix(spec):
    """Sparse 5-point Laplacian on the interior, boundary rules folded in."""

    def axis(k, periodic):
        main = -2.0 * np.ones(k)
        off = np.ones(k - 1)
        D = sp.diags([off, main, off], [-1, 0, 1], format="lil")
        if periodic:
            if k == 2:
                D[0, 1] += 1.0
                D[1, 0] += 1.0
            else:
                D[0, k - 1] += 1.0
                D[k - 1, 0] += 1.0
        else:
            D[0, 0] += 1.0
            D[k - 1, k - 1] += 1.0
        return D.tocsr()

    px, py = (c == _kernels.PERIODIC for c in spec.bc_codes)
    Dx = axis(spec.m, px)
    Dy = axis(spec.n, py)
    L = sp.kron(Dx, sp.identity(spec.n)) + sp.kron(sp.identity(spec.m), Dy)
    return (L / spec.h ** 2).tocsc()


class _Level:
    __slots__ = ("spec", "phi", "mu", "kap", "s1", "s2", "s3", "r1", "r2", "r3",
                 "phik", "lin", "phi0", "mu0", "kap0")

    def __init__(self, spec):
        self.spec = spec
        for name in self.__slots__[1:]:
            setattr(self, name, np.zeros(spec.shape))


class MgHierarchy:
    """Level stack from finest to coarsest with per-level workspaces.

    Build once per grid and reuse across time steps; :meth:`load` installs a
    new system (coefficients, restricted frozen data, fine source).
    """

    def __init__(self, spec, cfg=None):
        self.cfg = cfg or MgConfig()
        specs = [spec]
        s = spec
        while s.m % 2 == 0 and s.n % 2 == 0 and min(s.m, s.n) // 2 >= self.cfg.coarsest:
            s = s.coarsen()
            specs.append(s)
        self.levels = [_Level(s) for s in specs]
        self._lap = None
        self.a = self.c3 = 0.0
        self.order = 2

    @property
    def spec(self):
        return self.levels[0].spec

    def __len__(self):
        return len(self.levels)

    def load(self, sys):
        if sys.spec != self.spec:
            raise ValueError("system grid does not match hierarchy")
        self.a = float(sys.a)
        self.c3 = float(sys.c3)
        self.order = int(sys.order)
        top = self.levels[0]
        top.phik[:] = sys.frozen.data
        top.lin[:] = sys.lin.data
        top.s1[:] = sys.source[0].data
        top.s2[:] = sys.source[1].data
        top.s3[:] = sys.source[2].data
        for fine, coarse in zip(self.levels, self.levels[1:]):
            bc = coarse.spec.bc_codes
            for name in ("phik", "lin"):
                _kernels.restrict(getattr(fine, name), getattr(coarse, name))
                _kernels.fill_ghosts(getattr(coarse, name), *bc)
        return self

    def set_iterate(self, u):
        top = self.levels[0]
        for dst, src in zip((top.phi, top.mu, top.kap), u):
            dst[:] = src.data
            _kernels.fill_ghosts(dst, *top.spec.bc_codes)

    def iterate(self):
        top = self.levels[0]
        return tuple(CellField(top.spec, a.copy()) for a in (top.phi, top.mu, top.kap))

    # -- per-level kernels ------------------------------------------------

    def _args(self, L):
        return (L.phi, L.mu, L.kap, L.phik, L.lin)

    def relaxation(self, k):
        if self.cfg.relaxation == "auto":
            return auto_relaxation(self.a, self.c3, self.levels[k].spec.h)
        return float(self.cfg.relaxation)

    def smooth_level(self, k, passes):
        L = self.levels[k]
        newton = self.cfg.linearization is Linearization.NEWTON
        det = _kernels.smooth(L.phi, L.mu, L.kap, L.phik, L.lin, L.s1, L.s2, L.s3,
                              self.a, self.c3, L.spec.h, self.order, newton,
                              *L.spec.bc_codes, passes, self.relaxation(k))
        if not det >= 1e-300:
            raise SingularLocalSystem(f"local 3x3 determinant {det:.3e} on level {k}")

    def coarse_newton(self, k, rtol=1e-13, max_iter=20):
        """Solve ``N(u) = S`` on level ``k`` by sparse Newton iteration."""
        L = self.levels[k]
        if self._lap is None or self._lap[0] != k:
            self._lap = (k, laplacian_matrix(L.spec))
        lap = self._lap[1]
        ii = (slice(1, -1), slice(1, -1))
        p, mu, ka = (L.phi[ii].ravel(), L.mu[ii].ravel(), L.kap[ii].ravel())
        pk = L.phik[ii].ravel()
        lin = L.lin[ii].ravel()
        src = np.concatenate([L.s1[ii].ravel(), L.s2[ii].ravel(), L.s3[ii].ravel()])
        a, c3, order = self.a, self.c3, self.order
        n = p.size
        eye = sp.identity(n, format="csc")

        def F(p, mu, ka):
            g = p ** 3 if order == 1 else 0.25 * (p * p + pk * pk) * (p + pk)
            return np.concatenate([p - a * (lap @ mu), mu - g - lin * p - lap @ ka,
                                   ka - c3 * (lap @ p)]) - src

        r = F(p, mu, ka)
        goal = rtol * max(float(np.max(np.abs(src))), self.cfg.abs_floor)
        for _ in range(max_iter):
            if not np.max(np.abs(r)) > goal:
                break
            dg = 3 * p * p if order == 1 else 0.25 * (3 * p * p + 2 * p * pk + pk * pk)
            J = sp.bmat([[eye, -a * lap, None],
                         [sp.diags(-(dg + lin)), eye, -lap],
                         [-c3 * lap, None, eye]], format="csc")
            du = splu(J).solve(-r)
            p, mu, ka = p + du[:n], mu + du[n:2 * n], ka + du[2 * n:]
            r_new = F(p, mu, ka)
            if not np.max(np.abs(r_new)) < np.max(np.abs(r)):
                r = r_new
                break
            r = r_new
        shape = (L.spec.m, L.spec.n)
        for dst, src_ in ((L.phi, p), (L.mu, mu), (L.kap, ka)):
            dst[ii] = src_.reshape(shape)
            _kernels.fill_ghosts(dst, *L.spec.bc_codes)

    def residual_level(self, k):
        L = self.levels[k]
        return _kernels.residual(L.phi, L.mu, L.kap, L.phik, L.lin, L.s1, L.s2, L.s3,
                                 self.a, self.c3, L.spec.h, self.order, L.r1, L.r2, L.r3)

    def restore_mean(self):
        """Shift the finest ``phi`` so that ``mean(phi) = mean(S1)``.

        Under both boundary conditions the flux-form Laplacian sums to zero,
        so the exact solution of the first equation carries the mean of its
        source.  The shift removes the mass error an inexact solve would
        otherwise accumulate across steps; it leaves the third residual
        untouched and perturbs the other two by the (tiny) shift only.
        """
        top = self.levels[0]
        c = float(np.mean(top.s1[1:-1, 1:-1]) - np.mean(top.phi[1:-1, 1:-1]))
        top.phi[1:-1, 1:-1] += c
        _kernels.fill_ghosts(top.phi, *top.spec.bc_codes)
        return c

    def source_norm(self):
        top = self.levels[0]
        return max(float(np.max(np.abs(a[1:-1, 1:-1]))) for a in (top.s1, top.s2, top.s3))


def vcycle(hier, level=0):
    """One FAS V-cycle on ``hier`` starting at ``level`` (in place)."""
    cfg = hier.cfg
    if level == len(hier) - 1:
        if cfg.coarse_solver == "newton":
            hier.coarse_newton(level)
        else:
            hier.smooth_level(level, cfg.coarse_passes)
        return hier
    L = hier.levels[level]
    C = hier.levels[level + 1]
    bc = C.spec.bc_codes

    hier.smooth_level(level, cfg.l_max)
    hier.residual_level(level)

    for u, u0 in ((L.phi, C.phi), (L.mu, C.mu), (L.kap, C.kap)):
        _kernels.restrict(u, u0)
        _kernels.fill_ghosts(u0, *bc)
    C.phi0[:] = C.phi
    C.mu0[:] = C.mu
    C.kap0[:] = C.kap
    # coarse source S_c = N_c(R u) + R(S - N(u))
    _kernels.apply_operator(C.phi, C.mu, C.kap, C.phik, C.lin, hier.a, hier.c3,
                            C.spec.h, hier.order, C.s1, C.s2, C.s3)
    for r, s in ((L.r1, C.s1), (L.r2, C.s2), (L.r3, C.s3)):
        _kernels.restrict(r, C.r1)
        s[1:-1, 1:-1] += C.r1[1:-1, 1:-1]

    vcycle(hier, level + 1)

    for u, u0, fine in ((C.phi, C.phi0, L.phi), (C.mu, C.mu0, L.mu), (C.kap, C.kap0, L.kap)):
        u0[:] = u - u0
        _kernels.fill_ghosts(u0, *bc)
        _kernels.prolong_add(u0, fine)
        _kernels.fill_ghosts(fine, *L.spec.bc_codes)

    hier.smooth_level(level, cfg.l_max)
    return hier


@dataclass
class SolveResult:
    u: tuple
    cycles: int
    history: list = field(default_factory=list)
    initial_residual: float = 0.0
    target: float = 0.0

    @property
    def residual(self):
        return self.history[-1] if self.history else self.initial_residual

    def contraction_factors(self):
        """Successive ratios ``r_{k-1} / r_k`` including the initial residual."""
        seq = [self.initial_residual] + list(self.history)
        return [a / b for a, b in zip(seq, seq[1:]) if b > 0]


def default_guess(sys):
    """``(phi0, mu, kappa)`` with kappa and mu consistent with ``phi0``.

    ``phi0`` is ``sys.guess`` when the system carries one, else the frozen
    ``phi_k``.  Only the first equation carries a residual for this guess.
    """
    spec = sys.spec
    start = getattr(sys, "guess", None)
    phi = (start if start is not None else sys.frozen).copy()
    fill_ghosts(phi)
    lap = np.zeros(spec.shape)
    _kernels.laplacian(phi.data, spec.h, lap)
    kap = CellField(spec, sys.source[2].data + sys.c3 * lap)
    fill_ghosts(kap)
    _kernels.laplacian(kap.data, spec.h, lap)
    p = phi.data
    if sys.order == 1:
        g = p ** 3
    else:
        pk = sys.frozen.data
        g = 0.25 * (p * p + pk * pk) * (p + pk)
    mu = CellField(spec, sys.source[1].data + g + sys.lin.data * p + lap)
    fill_ghosts(mu)
    return phi, mu, kap


def solve_to_tolerance(sys, u0=None, cfg=None, hierarchy=None):
    """Run V-cycles until ``||S - N(u)|| <= tol * max(||S||, floor)``.

    After every cycle the mean of ``phi`` is reset to that of the first
    source (see :meth:`MgHierarchy.restore_mean`).  Norms are the maximum over the three components of the interior
    inf-norm.  ``history`` holds one residual per V-cycle.
    """
    if hierarchy is None:
        hierarchy = MgHierarchy(sys.spec, cfg)
    cfg = hierarchy.cfg
    hierarchy.load(sys)
    hierarchy.set_iterate(u0 if u0 is not None else default_guess(sys))

    target = cfg.tol * max(hierarchy.source_norm(), cfg.abs_floor)
    r0 = hierarchy.residual_level(0)
    history = []
    if r0 <= target:
        return SolveResult(hierarchy.iterate(), 0, history, r0, target)
    for _ in range(cfg.max_vcycles):
        vcycle(hierarchy)
        hierarchy.restore_mean()
        r = hierarchy.residual_level(0)
        history.append(r)
        if not np.isfinite(r):
            break
        if r <= target:
            return SolveResult(hierarchy.iterate(), len(history), history, r0, target)
    raise NoConvergence(
        f"FAS V-cycle reached residual {history[-1]:.3e} > target {target:.3e} "
        f"after {len(history)} cycles", history=history)


# -- field-level entry points -------------------------------------------------

def _single_level(sys, u, cfg=None):
    hier = MgHierarchy.__new__(MgHierarchy)
    hier.cfg = cfg or MgConfig()
    hier.levels = [_Level(sys.spec)]
    hier.load(sys)
    hier.set_iterate(u)
    return hier


def residual(sys, u):
    """Return ``(r1, r2, r3, norm)`` with ``r = S - N(u)`` on the interior."""
    hier = _single_level(sys, u)
    nrm = hier.residual_level(0)
    L = hier.levels[0]
    return (CellField(sys.spec, L.r1.copy()), CellField(sys.spec, L.r2.copy()),
            CellField(sys.spec, L.r3.copy()), nrm)


def apply_operator(sys, u):
    """Evaluate ``N(u)`` as three cell fields."""
    hier = _single_level(sys, u)
    L = hier.levels[0]
    _kernels.apply_operator(L.phi, L.mu, L.kap, L.phik, L.lin, hier.a, hier.c3,
                            L.spec.h, hier.order, L.r1, L.r2, L.r3)
    return tuple(CellField(sys.spec, a.copy()) for a in (L.r1, L.r2, L.r3))


def smooth(sys, u, passes=1, cfg=None):
    """Return ``u`` after ``passes`` red-black Gauss-Seidel passes."""
    if passes < 1:
        raise ValueError("passes must be at least 1")
    hier = _single_level(sys, u, cfg)
    hier.smooth_level(0, passes)
    return hier.iterate()


def restrict(f):
    """Cell-average restriction to the grid with doubled spacing."""
    spec = f.spec
    if spec.m % 2 or spec.n % 2:
        raise ValueError(f"cannot coarsen odd grid {spec.m}x{spec.n}")
    out = CellField(spec.coarsen())
    _kernels.restrict(f.data, out.data)
    return fill_ghosts(out)


def prolong(f, fine_spec=None):
    """Bilinear interpolation to the grid with halved spacing."""
    spec = f.spec
    if fine_spec is None:
        fine_spec = type(spec)(2 * spec.m, 2 * spec.n, spec.h / 2, spec.bc_x, spec.bc_y)
    src = f.copy()
    fill_ghosts(src)
    out = CellField(fine_spec)
    _kernels.prolong_add(src.data, out.data)
    return fill_ghosts(out)

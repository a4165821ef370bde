"""Inverse discrete Laplacian on mean-zero fields and the ``-1`` inner product.

The Poisson problem ``-lap_h psi = f`` is singular under periodic and Neumann
conditions; it is solved on the mean-zero subspace with a linear geometric
multigrid V(2,2)-cycle (red-black Gauss-Seidel, cell-average restriction,
bilinear prolongation) and the mean of the iterate pinned to zero after
every cycle.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import NoConvergence, NonZeroMean
from .grid import CellField, gradient, inner_edge, norm

# a mean this small relative to the RMS value is treated as roundoff
MEAN_SLACK = 1e-12


@dataclass(frozen=True)
class EllipticConfig:
    rel_tol: float = 1e-10
    max_iters: int = 200

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError(f"rel_tol must lie in (0, 1), got {self.rel_tol}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


_DEFAULT = EllipticConfig()

_COARSEST_PASSES = 60
_PASSES = 2


def _levels(spec):
    specs = [spec]
    s = spec
    while s.m % 2 == 0 and s.n % 2 == 0 and min(s.m, s.n) >= 4:
        s = s.coarsen()
        specs.append(s)
    return specs


def _vcycle(specs, psi, rhs, scratch, level):
    spec = specs[level]
    bcx, bcy = spec.bc_codes
    if level == len(specs) - 1:
        _kernels.poisson_smooth(psi[level], rhs[level], spec.h, bcx, bcy, _COARSEST_PASSES)
        return
    _kernels.poisson_smooth(psi[level], rhs[level], spec.h, bcx, bcy, _PASSES)
    r = scratch[level]
    _kernels.poisson_residual(psi[level], rhs[level], spec.h, r)
    _kernels.restrict(r, rhs[level + 1])
    # keep the coarse problem consistent (mean-zero right-hand side)
    rhs[level + 1][1:-1, 1:-1] -= _kernels.interior_mean(rhs[level + 1])
    psi[level + 1][:] = 0.0
    _vcycle(specs, psi, rhs, scratch, level + 1)
    _kernels.fill_ghosts(psi[level + 1], *specs[level + 1].bc_codes)
    _kernels.prolong_add(psi[level + 1], psi[level])
    _kernels.poisson_smooth(psi[level], rhs[level], spec.h, bcx, bcy, _PASSES)


def _checked_demean(f):
    mu = float(np.mean(f.interior))
    rms = norm(f) / np.sqrt(f.spec.area)
    if abs(mu) > MEAN_SLACK * rms:
        raise NonZeroMean(f"field mean {mu:.3e} exceeds roundoff slack ({MEAN_SLACK:g} x rms {rms:.3e})")
    return mu


def inv_laplacian(f, cfg=_DEFAULT):
    """Return the mean-zero ``psi`` with ``-lap_h psi = f``.

    Raises
    ------
    NonZeroMean
        If ``f`` is not mean-zero up to roundoff.
    NoConvergence
        If ``||lap_h psi + f||_2 <= rel_tol ||f||_2`` is not reached.
    """
    spec = f.spec
    mu = _checked_demean(f)
    specs = _levels(spec)
    psi = [np.zeros(s.shape) for s in specs]
    rhs = [np.zeros(s.shape) for s in specs]
    scratch = [np.zeros(s.shape) for s in specs]
    rhs[0][:] = f.data
    rhs[0][1:-1, 1:-1] -= mu

    out = CellField(spec, psi[0])
    fnorm = np.sqrt(np.sum(rhs[0][1:-1, 1:-1] ** 2))
    if fnorm == 0.0:
        return out
    target = cfg.rel_tol * fnorm
    history = []
    for _ in range(cfg.max_iters):
        _vcycle(specs, psi, rhs, scratch, 0)
        psi[0][1:-1, 1:-1] -= _kernels.interior_mean(psi[0])
        _kernels.fill_ghosts(psi[0], *spec.bc_codes)
        res = _kernels.poisson_residual(psi[0], rhs[0], spec.h, scratch[0])
        history.append(res / fnorm)
        if res <= target:
            return out
    raise NoConvergence(f"Poisson solve stalled at relative residual {history[-1]:.3e}",
                        history=history)


def hminus_inner(f, g, cfg=_DEFAULT):
    """Discrete ``-1`` inner product of two mean-zero fields."""
    pf = inv_laplacian(f, cfg)
    pg = pf if g is f else inv_laplacian(g, cfg)
    uf, vf = gradient(pf)
    ug, vg = gradient(pg)
    return inner_edge(uf, ug, vf, vg)


def hminus_norm(f, cfg=_DEFAULT):
    return float(np.sqrt(max(hminus_inner(f, f, cfg), 0.0)))


def project_mean_zero(f):
    """Orthogonal projection onto the mean-zero space (no checks)."""
    return f - float(np.mean(f.interior))


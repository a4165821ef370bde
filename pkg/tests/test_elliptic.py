import numpy as np
import pytest

from mpfc.elliptic import (EllipticConfig, hminus_inner, hminus_norm, inv_laplacian,
                           project_mean_zero)
from mpfc.errors import NonZeroMean
from mpfc.grid import CellField, GridSpec, gradient, inner_cell, inner_edge, laplacian, norm

from conftest import BCS, grid, random_field


def _mean_zero(spec, rng):
    return project_mean_zero(random_field(spec, rng))


def test_config_validation():
    with pytest.raises(ValueError):
        EllipticConfig(rel_tol=0.0)
    with pytest.raises(ValueError):
        EllipticConfig(max_iters=0)


def test_zero_rhs():
    spec = GridSpec.square(16, 8.0)
    psi = inv_laplacian(CellField(spec))
    assert np.all(psi.interior == 0.0)
    assert hminus_norm(CellField(spec)) == 0.0


def test_nonzero_mean_rejected():
    spec = GridSpec.square(8, 8.0)
    with pytest.raises(NonZeroMean):
        inv_laplacian(CellField.constant(spec, 1e-6))


def test_roundoff_mean_absorbed(rng):
    spec = grid(16, 16)
    f = _mean_zero(spec, rng) + 1e-15
    psi = inv_laplacian(f)
    assert abs(np.mean(psi.interior)) < 1e-14


def test_eigenmode():
    spec = GridSpec.square(32, 32.0)
    x, _ = spec.centers()
    f = CellField.from_interior(spec, np.cos(2 * np.pi * x / spec.lx))
    lam = (2.0 / spec.h * np.sin(np.pi * spec.h / spec.lx)) ** 2
    psi = inv_laplacian(f)
    assert np.allclose(psi.interior, f.interior / lam, atol=1e-9 / lam)
    assert np.isclose(hminus_norm(f) ** 2, norm(f) ** 2 / lam, rtol=1e-9)


@pytest.mark.parametrize("bcs", BCS)
@pytest.mark.parametrize("shape", [(16, 16), (32, 24), (12, 10)])
def test_round_trip(rng, bcs, shape):
    spec = grid(*shape, *bcs, length=0.5 * shape[0])
    f = _mean_zero(spec, rng)
    cfg = EllipticConfig(rel_tol=1e-10)
    psi = inv_laplacian(f, cfg)
    res = norm(laplacian(psi) + f)
    assert res <= cfg.rel_tol * norm(f) * (1 + 1e-9)
    assert abs(np.mean(psi.interior)) < 1e-13


@pytest.mark.parametrize("bcs", BCS)
def test_hminus_inner_properties(rng, bcs):
    spec = grid(8, 8, *bcs)
    f = _mean_zero(spec, rng)
    g = _mean_zero(spec, rng)
    a, b = hminus_inner(f, g), hminus_inner(g, f)
    assert abs(a - b) <= 1e-10 * max(abs(a), 1.0)
    psi_g = inv_laplacian(g)
    assert abs(a - inner_cell(f, psi_g)) <= 10 * 1e-10 * norm(f) * norm(psi_g)
    assert np.isclose(hminus_norm(-3.0 * f), 3.0 * hminus_norm(f), rtol=1e-9)


def test_positivity(rng):
    spec = grid(16, 16, "periodic", "neumann")
    for _ in range(10):
        assert hminus_norm(_mean_zero(spec, rng)) > 0.0


def test_hminus_is_gradient_energy_of_potential(rng):
    spec = grid(16, 8)
    f = _mean_zero(spec, rng)
    u, v = gradient(inv_laplacian(f))
    assert np.isclose(hminus_norm(f) ** 2, inner_edge(u, u, v, v), rtol=1e-14)

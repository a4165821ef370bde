"""Initial density fields."""

import numpy as np

from ..errors import ComplexAmplitude, DomainMismatch
from ..grid import CellField

Q_T = np.sqrt(3.0) / 2.0


def benchmark_density(x, y):
    tau = 2.0 * np.pi / 32.0
    return (0.07
            - 0.02 * np.cos(tau * (x - 12.0)) * np.sin(tau * (y - 1.0))
            + 0.02 * np.cos(np.pi * (x + 10.0) / 32.0) ** 2 * np.cos(np.pi * (y + 3.0) / 32.0) ** 2
            - 0.01 * np.sin(4.0 * np.pi * x / 32.0) ** 2 * np.sin(4.0 * np.pi * (y - 6.0) / 32.0) ** 2)


def init_benchmark(spec):
    """Smooth test density on ``(0, 32)^2`` sampled at cell centres."""
    if not (np.isclose(spec.lx, 32.0) and np.isclose(spec.ly, 32.0)):
        raise DomainMismatch(f"benchmark data lives on (0,32)^2, grid is {spec.lx}x{spec.ly}")
    x, y = spec.centers()
    return CellField.from_interior(spec, benchmark_density(x, y))


def init_constant(spec, value):
    return CellField.constant(spec, value)


def init_random(spec, mean=0.07, amp=0.07, seed=0):
    """``mean + eta`` with ``eta ~ Uniform(-amp, amp)`` i.i.d. per cell.

    The generator is numpy's PCG64 seeded with ``seed``; the interior is
    drawn in one call of shape ``(m, n)``, so a seed fixes the field
    bit-for-bit on every platform numpy supports.
    """
    if amp < 0:
        raise ValueError(f"amplitude must be non-negative, got {amp}")
    rng = np.random.Generator(np.random.PCG64(seed))
    eta = rng.uniform(-amp, amp, size=(spec.m, spec.n)) if amp > 0 else np.zeros((spec.m, spec.n))
    return CellField.from_interior(spec, mean + eta)


def init_seeds(spec, mean=0.285, amp=0.3, radius=4.0, sites=3, seed=0):
    """Constant density with Gaussian bumps centred on the ``y = 0`` edge.

    The bump abscissae are drawn uniformly on ``[0, lx)`` from a PCG64
    generator seeded with ``seed``; ``sites`` may also be a sequence of
    explicit abscissae.
    """
    if np.ndim(sites) == 0:
        rng = np.random.Generator(np.random.PCG64(seed))
        xs = np.sort(rng.uniform(0.0, spec.lx, size=int(sites)))
    else:
        xs = np.asarray(sites, dtype=float)
    x, y = spec.centers()
    phi = np.full(x.shape, float(mean))
    for x0 in xs:
        # nearest periodic image along x
        dx = x - x0
        dx -= spec.lx * np.round(dx / spec.lx)
        phi += amp * np.exp(-(dx * dx + y * y) / (2.0 * radius * radius))
    return CellField.from_interior(spec, phi)


def single_mode_amplitude(phi_s, epsilon):
    """Amplitude of the one-mode triangular-lattice approximation."""
    rad = 15.0 * epsilon - 36.0 * phi_s * phi_s
    if rad < 0:
        raise ComplexAmplitude(
            f"15 eps - 36 phi_s^2 = {rad:.4g} < 0 for eps={epsilon}, phi_s={phi_s}")
    return 0.8 * phi_s + (4.0 / 15.0) * np.sqrt(rad)


def single_mode_density(x, y, phi_s, amplitude):
    q = Q_T
    return phi_s + amplitude * (np.cos(q * x) * np.cos(q * y / np.sqrt(3.0))
                                - 0.5 * np.cos(2.0 * q * y / np.sqrt(3.0)))


# lattice geometry of the single-mode density: atoms repeat every 2 pi / q_t
# along x, and rows of atoms are 2 pi / (2 q_t / sqrt 3) = 2 pi apart along y
LATTICE_X = 2.0 * np.pi / Q_T
ROW_SPACING = np.pi * np.sqrt(3.0) / Q_T

# grid of the crystal-strip experiment: 512 x 400 cells, 16 cells per lattice period
STRIP_PRESET = {"m": 512, "n": 400, "h": LATTICE_X / 16.0}


def init_crystal_strip(spec, phi_s=0.395, phi_l=0.57, epsilon=0.6, layers=20,
                       pin_thickness=np.pi, pin_weight=2.0, shear_fraction=0.0):
    """Crystal strip of ``layers`` atomic rows in a liquid of density ``phi_l``.

    The strip is centred vertically.  Returns ``(phi, pin)`` where ``pin`` is
    a :class:`~mpfc.scheme.PinningSpec` holding weight ``pin_weight`` in
    bands of height ``pin_thickness`` along the top and bottom of the
    crystal.  The pinning target is the unperturbed crystal, with the top
    band translated along x by ``shear_fraction`` lattice periods.
    """
    from ..scheme import PinningSpec

    A = single_mode_amplitude(phi_s, epsilon)
    height = layers * ROW_SPACING
    if height > spec.ly:
        raise DomainMismatch(f"{layers} layers need height {height:.3f} > ly = {spec.ly:.3f}")
    y0 = 0.5 * (spec.ly - height)
    x, y = spec.centers()
    yl = y - y0
    inside = (yl >= 0.0) & (yl < height)
    crystal = single_mode_density(x, yl, phi_s, A)
    phi = np.where(inside, crystal, phi_l)

    bottom = inside & (yl < pin_thickness)
    top = inside & (yl >= height - pin_thickness)
    shifted = single_mode_density(x - shear_fraction * LATTICE_X, yl, phi_s, A)
    target = np.where(top, shifted, crystal)
    weight = np.where(bottom | top, pin_weight, 0.0)
    pin = PinningSpec(CellField.from_interior(spec, weight),
                      CellField.from_interior(spec, np.where(inside, target, phi_l)))
    return CellField.from_interior(spec, phi), pin

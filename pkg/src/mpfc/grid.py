"""Staggered-grid data structures and the difference/average operators.

Cell-centred fields carry one ghost layer; the interior is ``data[1:-1, 1:-1]``
with the first index running along x.  Edge fields hold only the edges:
east-west values ``u[i, j]`` sit at ``(i + 1/2, j + 1)`` for ``i = 0..m`` and
north-south values ``v[i, j]`` at ``(i + 1, j + 1/2)`` for ``j = 0..n``.

Every inner product and norm here carries the ``h**2`` quadrature weight, so
``inner_cell(1, 1)`` is the domain area.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels


class BC(str, Enum):
    PERIODIC = "periodic"
    NEUMANN = "neumann"

    @property
    def code(self):
        return _kernels.PERIODIC if self is BC.PERIODIC else _kernels.NEUMANN


@dataclass(frozen=True)
class GridSpec:
    """Uniform ``m x n`` cell-centred grid on ``(0, m h) x (0, n h)``."""

    m: int
    n: int
    h: float
    bc_x: BC = BC.PERIODIC
    bc_y: BC = BC.PERIODIC

    def __post_init__(self):
        if int(self.m) != self.m or int(self.n) != self.n:
            raise ValueError("m and n must be integers")
        if self.m < 2 or self.n < 2:
            raise ValueError(f"grid must be at least 2x2, got {self.m}x{self.n}")
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")
        object.__setattr__(self, "bc_x", BC(self.bc_x))
        object.__setattr__(self, "bc_y", BC(self.bc_y))

    @classmethod
    def square(cls, n, length, bc=BC.PERIODIC):
        return cls(n, n, length / n, bc, bc)

    @property
    def lx(self):
        return self.m * self.h

    @property
    def ly(self):
        return self.n * self.h

    @property
    def area(self):
        return self.lx * self.ly

    @property
    def shape(self):
        return (self.m + 2, self.n + 2)

    @property
    def bc_codes(self):
        return self.bc_x.code, self.bc_y.code

    def centers(self):
        """Cell-centre coordinate arrays ``(x, y)`` of interior shape, ij-indexed."""
        x = (np.arange(1, self.m + 1) - 0.5) * self.h
        y = (np.arange(1, self.n + 1) - 0.5) * self.h
        return np.meshgrid(x, y, indexing="ij")

    def coarsen(self):
        return GridSpec(self.m // 2, self.n // 2, 2.0 * self.h, self.bc_x, self.bc_y)


class CellField:
    """Cell-centred scalar grid function with one ghost layer.

    Arithmetic acts on the full array, ghosts included; linear combinations
    and pointwise functions of boundary-consistent fields stay consistent.
    """

    __slots__ = ("spec", "data")

    def __init__(self, spec, data=None):
        self.spec = spec
        if data is None:
            data = np.zeros(spec.shape)
        data = np.ascontiguousarray(data, dtype=np.float64)
        if data.shape != spec.shape:
            raise ValueError(f"data shape {data.shape} does not match grid {spec.shape}")
        self.data = data

    @classmethod
    def zeros(cls, spec):
        return cls(spec)

    @classmethod
    def constant(cls, spec, value):
        return cls(spec, np.full(spec.shape, float(value)))

    @classmethod
    def from_interior(cls, spec, values):
        f = cls(spec)
        f.data[1:-1, 1:-1] = values
        return fill_ghosts(f)

    @property
    def interior(self):
        return self.data[1:-1, 1:-1]

    def copy(self):
        return CellField(self.spec, self.data.copy())

    def _other(self, other):
        if isinstance(other, CellField):
            if other.spec != self.spec:
                raise ValueError("fields live on different grids")
            return other.data
        return other

    def __add__(self, other):
        return CellField(self.spec, self.data + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return CellField(self.spec, self.data - self._other(other))

    def __rsub__(self, other):
        return CellField(self.spec, self._other(other) - self.data)

    def __mul__(self, other):
        return CellField(self.spec, self.data * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return CellField(self.spec, self.data / self._other(other))

    def __neg__(self):
        return CellField(self.spec, -self.data)

    def __pow__(self, p):
        return CellField(self.spec, self.data ** p)

    def __repr__(self):
        s = self.spec
        return f"CellField({s.m}x{s.n}, h={s.h:g}, {s.bc_x.value}/{s.bc_y.value})"


@dataclass
class EdgeFieldEW:
    spec: GridSpec
    data: np.ndarray

    def __post_init__(self):
        if self.data.shape != (self.spec.m + 1, self.spec.n):
            raise ValueError(f"east-west edge data must be {(self.spec.m + 1, self.spec.n)}")


@dataclass
class EdgeFieldNS:
    spec: GridSpec
    data: np.ndarray

    def __post_init__(self):
        if self.data.shape != (self.spec.m, self.spec.n + 1):
            raise ValueError(f"north-south edge data must be {(self.spec.m, self.spec.n + 1)}")


def fill_ghosts(f):
    """Set the ghost ring of ``f`` in place from its interior and return it."""
    _kernels.fill_ghosts(f.data, *f.spec.bc_codes)
    return f


def laplacian(f):
    """Five-point Laplacian, returned with its ghosts filled."""
    out = CellField(f.spec)
    _kernels.laplacian(f.data, f.spec.h, out.data)
    return fill_ghosts(out)


def gradient(f):
    """Centre-to-edge differences ``(D_x f, D_y f)``."""
    a, h = f.data, f.spec.h
    ew = (a[1:, 1:-1] - a[:-1, 1:-1]) / h
    ns = (a[1:-1, 1:] - a[1:-1, :-1]) / h
    return EdgeFieldEW(f.spec, ew), EdgeFieldNS(f.spec, ns)


def average_edge(f):
    """Centre-to-edge averages ``(A_x f, A_y f)``."""
    a = f.data
    ew = 0.5 * (a[1:, 1:-1] + a[:-1, 1:-1])
    ns = 0.5 * (a[1:-1, 1:] + a[1:-1, :-1])
    return EdgeFieldEW(f.spec, ew), EdgeFieldNS(f.spec, ns)


def edge_divergence(u, v):
    """Edge-to-centre difference ``d_x u + d_y v``; ghosts of the result are filled."""
    spec = u.spec
    if v.spec != spec:
        raise ValueError("edge fields live on different grids")
    h = spec.h
    out = CellField(spec)
    # summed in the same order as the Laplacian stencil so the two agree bitwise
    ue, vn = u.data, v.data
    out.data[1:-1, 1:-1] = (ue[1:, :] - ue[:-1, :] + vn[:, 1:] - vn[:, :-1]) / h
    return fill_ghosts(out)


def inner_cell(f, g):
    """``h^2 * sum_ij f_ij g_ij`` over the interior."""
    h = f.spec.h
    return h * h * float(np.sum(f.interior * g.interior))


def _edge_weights(k):
    w = np.ones(k)
    w[0] = w[-1] = 0.5
    return w


def inner_edge(u1, u2, v1, v2):
    """Weighted edge inner product ``h^2 ([u1, u2]_ew + [v1, v2]_ns)``.

    Boundary edges carry weight 1/2 so the discrete Green's identities hold
    exactly; on a periodic axis the two boundary edges are one physical edge.
    """
    spec = u1.spec
    h = spec.h
    wx = _edge_weights(spec.m + 1)
    wy = _edge_weights(spec.n + 1)
    ew = float(np.sum(wx[:, None] * u1.data * u2.data))
    ns = float(np.sum(wy[None, :] * v1.data * v2.data))
    return h * h * (ew + ns)


def norm(f, p=2):
    h2 = f.spec.h ** 2
    a = f.interior
    if p == 2:
        return float(np.sqrt(h2 * np.sum(a * a)))
    if p == 4:
        return float((h2 * np.sum(a ** 4)) ** 0.25)
    if p in ("inf", np.inf):
        return float(np.max(np.abs(a)))
    raise ValueError(f"unsupported norm order {p!r}")


def grad_norm2(f):
    """Discrete ``||grad_h f||_2``."""
    u, v = gradient(f)
    return float(np.sqrt(inner_edge(u, u, v, v)))


def mean(f):
    return float(np.mean(f.interior))

"""Field snapshots and energy time series on disk.

Field file layout (all little-endian)::

    offset  size  content
    0       8     magic  b"MPFCFLD\\0"
    8       4     uint32 format version (1)
    12      4     uint32 m
    16      4     uint32 n
    20      8     float64 h
    28      1     uint8  x boundary tag (0 periodic, 1 neumann)
    29      1     uint8  y boundary tag
    30      2     padding (zero)
    32      8     float64 time
    40      ...   m * n float64 interior values, row-major with the
                  x index slowest (``data[i, j]`` at ``40 + 8 (i n + j)``)
"""

import csv
import struct
from dataclasses import astuple, dataclass, fields

import numpy as np

from ..grid import BC, CellField, GridSpec

MAGIC = b"MPFCFLD\0"
VERSION = 1
_HEADER = struct.Struct("<8sIIIdBB2xd")
_TAGS = {BC.PERIODIC: 0, BC.NEUMANN: 1}
_FROM_TAG = {v: k for k, v in _TAGS.items()}


def write_field(f, path, time=0.0):
    """Write the interior of ``f`` with a self-describing header."""
    spec = f.spec
    header = _HEADER.pack(MAGIC, VERSION, spec.m, spec.n, spec.h,
                          _TAGS[spec.bc_x], _TAGS[spec.bc_y], float(time))
    body = np.ascontiguousarray(f.interior, dtype="<f8").tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(body)
    except OSError as exc:
        raise OSError(f"cannot write field file {path}: {exc}") from exc


def read_field(path):
    """Return ``(field, time)`` from a file written by :func:`write_field`."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read field file {path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, m, n, h, tx, ty, time = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a field file (bad magic)")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    if len(raw) != _HEADER.size + 8 * m * n:
        raise ValueError(f"{path}: expected {m}x{n} values, file size is {len(raw)} bytes")
    spec = GridSpec(m, n, h, _FROM_TAG[tx], _FROM_TAG[ty])
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(m, n)
    return CellField.from_interior(spec, data.astype(np.float64)), time


@dataclass(frozen=True)
class EnergyRow:
    step: int
    t: float
    F: float
    Fc: float
    Fe: float
    pseudo: float
    modified: float
    mass: float
    psi_mean: float
    vcycles: int
    residual: float

    @classmethod
    def from_report(cls, step, t, report, vcycles=0, residual=0.0):
        return cls(step, t, report.f, report.fc, report.fe, report.pseudo,
                   report.modified, report.mass, report.psi_mean, vcycles, residual)


ENERGY_COLUMNS = tuple(f.name for f in fields(EnergyRow))


def write_energy_series(rows, path):
    """Write rows as CSV; floats use ``repr`` so they round-trip exactly."""
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(ENERGY_COLUMNS)
            for row in rows:
                w.writerow([repr(v) if isinstance(v, float) else v for v in astuple(row)])
    except OSError as exc:
        raise OSError(f"cannot write energy series {path}: {exc}") from exc


def read_energy_series(path):
    types = [f.type for f in fields(EnergyRow)]
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if tuple(header) != ENERGY_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        return [EnergyRow(*(int(v) if t in (int, "int") else float(v)
                            for t, v in zip(types, line))) for line in r]

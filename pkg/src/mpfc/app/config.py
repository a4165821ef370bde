"""Flat ``key = value`` run configuration.

A config file holds one assignment per line; ``#`` starts a comment and
blank lines are ignored.  Keys are the field names of :class:`SimConfig`.
The special key ``preset`` (which must come first if present) starts
from one of :data:`PRESETS` instead of the defaults.  Command-line
overrides use the same ``key=value`` syntax and are applied last.

Example::

    preset = benchmark
    scheme = first
    s = 0.025
    t_final = 10
    out_dir = runs/first
"""

from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from ..elliptic import EllipticConfig
from ..energy import Params
from ..grid import BC, GridSpec
from ..multigrid import MgConfig
from ..scheme import Scheme

INIT_KINDS = ("benchmark", "random", "seeds", "strip", "constant")
PIN_KINDS = ("off", "strip")


@dataclass(frozen=True)
class SimConfig:
    # grid: give h, or lx (and optionally ly) from which h = lx / m
    m: int = 128
    n: int = 128
    h: Optional[float] = None
    lx: Optional[float] = 32.0
    ly: Optional[float] = None
    bc_x: str = "periodic"
    bc_y: str = "periodic"
    # model and time stepping
    M: float = 1.0
    epsilon: float = 0.025
    beta: float = 0.9
    s: float = 0.1
    scheme: str = "second"
    t_final: float = 10.0
    # multigrid
    mg_tol: float = 1e-10
    mg_l_max: int = 1
    mg_max_vcycles: int = 100
    mg_coarsest: int = 4
    mg_coarse_passes: int = 50
    mg_linearization: str = "picard"
    mg_relaxation: str = "auto"
    mg_coarse_solver: str = "newton"
    # -1 norm solves
    ell_rel_tol: float = 1e-10
    ell_max_iters: int = 200
    # initial data
    init: str = "benchmark"
    init_mean: float = 0.07
    init_amp: float = 0.07
    init_seed: int = 0
    init_sites: int = 3
    init_radius: float = 4.0
    init_phi_s: float = 0.395
    init_phi_l: float = 0.57
    init_layers: int = 20
    # pinning
    pin: str = "off"
    pin_weight: float = 2.0
    pin_thickness: float = float(np.pi)
    pin_shear: float = 0.0
    # output
    out_dir: Optional[str] = None
    field_every: int = 0
    energy_every: int = 1
    hminus: bool = True

    def __post_init__(self):
        if not self.t_final > 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if self.energy_every < 1:
            raise ValueError("energy_every must be at least 1 step")
        if self.field_every < 0:
            raise ValueError("field_every must be non-negative (0 writes only the final field)")
        if self.init not in INIT_KINDS:
            raise ValueError(f"init must be one of {INIT_KINDS}, got {self.init!r}")
        if self.pin not in PIN_KINDS:
            raise ValueError(f"pin must be one of {PIN_KINDS}, got {self.pin!r}")
        if self.pin == "strip" and self.init != "strip":
            raise ValueError("strip pinning needs init = strip")
        Scheme(self.scheme)
        BC(self.bc_x), BC(self.bc_y)

    # -- derived objects ----------------------------------------------------

    def grid(self):
        if self.h is not None:
            h = float(self.h)
        elif self.lx is not None:
            h = float(self.lx) / self.m
        else:
            raise ValueError("config needs h or lx")
        if self.ly is not None and not np.isclose(self.ly, self.n * h):
            raise ValueError(f"ly = {self.ly} inconsistent with n h = {self.n * h}")
        return GridSpec(self.m, self.n, h, BC(self.bc_x), BC(self.bc_y))

    def params(self):
        return Params(M=self.M, epsilon=self.epsilon, beta=self.beta, s=self.s)

    def mg(self):
        relax = self.mg_relaxation
        return MgConfig(l_max=self.mg_l_max, tol=self.mg_tol, max_vcycles=self.mg_max_vcycles,
                        coarsest=self.mg_coarsest, coarse_passes=self.mg_coarse_passes,
                        linearization=self.mg_linearization,
                        coarse_solver=self.mg_coarse_solver,
                        relaxation=relax if relax == "auto" else float(relax))

    def elliptic(self):
        return EllipticConfig(rel_tol=self.ell_rel_tol, max_iters=self.ell_max_iters)

    def steps(self):
        """Number of uniform steps reaching ``t_final`` without exceeding ``s``."""
        k = int(np.ceil(self.t_final / self.s - 1e-9))
        return max(k, 1)

    def step_size(self):
        """The uniform step ``t_final / steps()`` actually taken (``<= s``)."""
        return self.t_final / self.steps()

    def with_overrides(self, items):
        return replace(self, **parse_assignments(items))


_FIELD_TYPES = {f.name: f.type for f in fields(SimConfig)}


def _convert(key, text):
    if key not in _FIELD_TYPES:
        raise KeyError(f"unknown config key {key!r}")
    typ = _FIELD_TYPES[key]
    text = text.strip()
    if typ in (Optional[float], Optional[str]) and text.lower() in ("none", ""):
        return None
    if typ in (float, Optional[float]):
        return float(text)
    if typ is int:
        return int(text)
    if typ is bool:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: not a boolean: {text!r}")
    return text


def parse_assignments(items):
    """Turn ``["key=value", ...]`` into a typed dict (``preset`` excluded)."""
    out = {}
    for item in items:
        if "=" not in item:
            raise ValueError(f"expected key=value, got {item!r}")
        key, value = item.split("=", 1)
        key = key.strip()
        if key == "preset":
            raise ValueError("preset may only appear first in a config file")
        out[key] = _convert(key, value)
    return out


def _lines(text):
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line


def parse_config(text, overrides=()):
    lines = list(_lines(text))
    base = SimConfig()
    if lines and lines[0].split("=", 1)[0].strip() == "preset":
        base = preset(lines[0].split("=", 1)[1].strip())
        lines = lines[1:]
    return base.with_overrides(lines).with_overrides(overrides)


def load_config(path=None, overrides=()):
    """Read a config file (``None`` means defaults) and apply overrides."""
    if path is None:
        return SimConfig().with_overrides(overrides)
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, overrides)


def dump_config(cfg):
    """Inverse of :func:`parse_config` for a fully specified config."""
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        lines.append(f"{f.name} = {'none' if v is None else repr(v) if isinstance(v, float) else v}")
    return "\n".join(lines) + "\n"


def _strip_preset():
    from .initial import STRIP_PRESET
    h = STRIP_PRESET["h"]
    return SimConfig(m=STRIP_PRESET["m"], n=STRIP_PRESET["n"], h=h, lx=None,
                     bc_x="periodic", bc_y="neumann", M=15.0 ** 2, epsilon=0.6,
                     s=0.025 * h * h, t_final=1.0, init="strip", pin="strip",
                     energy_every=10)


PRESETS = {
    # smooth data used for refinement, solver and energy tests
    "benchmark": lambda: SimConfig(),
    # large-step solver efficiency run: 20 steps of s = 10
    "efficiency": lambda: SimConfig(s=10.0, t_final=200.0),
    # weak damping: F may rise while the modified energy falls
    "low-damping": lambda: SimConfig(beta=0.01, s=0.1, t_final=100.0),
    # noisy constant state crystallising on 128^2 cells of width 1
    "random": lambda: SimConfig(lx=128.0, init="random", s=0.1, t_final=350.0,
                                energy_every=10),
    # crystals nucleating from the bottom wall (periodic x, no-flux y); the
    # cell width of the large polycrystal run on a 256^2 window
    "seeds": lambda: SimConfig(m=256, n=256, h=804.0 / 2048.0, lx=None, bc_y="neumann",
                               epsilon=0.25, init="seeds", init_mean=0.285, init_amp=0.3,
                               s=1.0, t_final=500.0, energy_every=10),
    "strip": _strip_preset,
}


def preset(name):
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None

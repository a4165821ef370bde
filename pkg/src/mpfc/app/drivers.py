"""Simulation driver and the refinement, solver and energy experiments."""

import math
import os
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..energy import energy_report
from ..errors import GridMismatch, NoConvergence
from ..grid import norm
from ..multigrid import MgHierarchy, restrict
from ..scheme import Scheme, SchemeState, advance, solver_slack
from .initial import (init_benchmark, init_constant, init_crystal_strip, init_random,
                      init_seeds)
from .io import EnergyRow, write_energy_series, write_field


def initial_state(cfg):
    """Return ``(phi0, pin)`` described by ``cfg``; ``pin`` is ``None`` when off."""
    spec = cfg.grid()
    pin = None
    if cfg.init == "benchmark":
        phi = init_benchmark(spec)
    elif cfg.init == "random":
        phi = init_random(spec, cfg.init_mean, cfg.init_amp, cfg.init_seed)
    elif cfg.init == "constant":
        phi = init_constant(spec, cfg.init_mean)
    elif cfg.init == "seeds":
        phi = init_seeds(spec, cfg.init_mean, cfg.init_amp, cfg.init_radius,
                         cfg.init_sites, cfg.init_seed)
    else:
        phi, strip_pin = init_crystal_strip(
            spec, cfg.init_phi_s, cfg.init_phi_l, cfg.epsilon, cfg.init_layers,
            cfg.pin_thickness, cfg.pin_weight, cfg.pin_shear)
        if cfg.pin == "strip":
            pin = strip_pin
    return phi, pin


@dataclass
class RunReport:
    """Outcome of :func:`run`.

    ``rows`` has one entry per ``energy_every`` steps (step 0 is kept
    separately in ``initial``); ``slack`` holds the solver slack of each
    sampled step.
    """

    config: object
    initial: EnergyRow
    rows: list
    final: SchemeState
    step_size: float
    steps: int
    vcycles: int = 0
    slack: list = field(default_factory=list)
    last_history: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    failed_step: Optional[int] = None

    def column(self, name, with_initial=True):
        vals = [getattr(r, name) for r in self.rows]
        return np.array([getattr(self.initial, name)] + vals if with_initial else vals)


def run(cfg, on_step=None, pin=None):
    """Integrate ``cfg`` to ``t_final`` with uniform steps of ``cfg.step_size()``.

    ``on_step(state, result)`` is called after every step.  An explicit
    :class:`~mpfc.scheme.PinningSpec` in ``pin`` replaces the one the config
    describes.  On
    :class:`NoConvergence` the energy series and the last good field are
    written before the exception (carrying the step index) propagates.
    """
    params = cfg.params().with_step(cfg.step_size())
    scheme = Scheme(cfg.scheme)
    ell = cfg.elliptic()
    phi0, cfg_pin = initial_state(cfg)
    if pin is None:
        pin = cfg_pin
    state = SchemeState.initial(phi0)
    hier = MgHierarchy(state.spec, cfg.mg())
    nsteps = cfg.steps()
    out = cfg.out_dir
    if out:
        os.makedirs(out, exist_ok=True)

    timings = {"solve": 0.0, "energy": 0.0, "io": 0.0}
    init_row = EnergyRow.from_report(0, 0.0, energy_report(state, params, ell, pin,
                                                           hminus=cfg.hminus))
    report = RunReport(cfg, init_row, [], state, params.s, nsteps, timings=timings)

    def snapshot(st):
        t0 = time.perf_counter()
        path = os.path.join(out, f"phi_{st.k:07d}.fld")
        write_field(st.phi, path, st.t)
        report.files.append(path)
        timings["io"] += time.perf_counter() - t0

    if out and cfg.field_every:
        snapshot(state)
    try:
        for k in range(1, nsteps + 1):
            t0 = time.perf_counter()
            state, res = advance(state, params, scheme, pin, hierarchy=hier)
            timings["solve"] += time.perf_counter() - t0
            report.vcycles += res.cycles
            report.last_history = list(res.history)
            report.final = state
            if k % cfg.energy_every == 0:
                t0 = time.perf_counter()
                rep = energy_report(state, params, ell, pin, hminus=cfg.hminus)
                report.rows.append(EnergyRow.from_report(k, state.t, rep, res.cycles,
                                                         res.residual))
                report.slack.append(solver_slack(hier.cfg.tol, state.phi, res.u[1]))
                timings["energy"] += time.perf_counter() - t0
            if out and cfg.field_every and k % cfg.field_every == 0:
                snapshot(state)
            if on_step is not None:
                on_step(state, res)
    except NoConvergence as exc:
        report.failed_step = exc.step
        raise
    finally:
        if out:
            t0 = time.perf_counter()
            if not report.files or report.files[-1] != _field_path(out, report.final.k):
                snapshot(report.final)
            write_energy_series([init_row] + report.rows, os.path.join(out, "energy.csv"))
            timings["io"] += time.perf_counter() - t0
    return report


def _field_path(out, k):
    return os.path.join(out, f"phi_{k:07d}.fld")


# -- experiments --------------------------------------------------------------

_NEVER = 2 ** 62  # energy cadence that samples no step

REFINEMENT_PATHS = {
    "quadratic": lambda h: 0.025 * h * h,
    "linear": lambda h: 0.05 * h,
}


def cauchy_error(coarse, fine):
    """Area-normalised 2-norm of ``coarse - R(fine)``, with ``R`` the cell average.

    The weighted norm ``sqrt(h^2 sum d^2)`` is divided by ``sqrt(|Omega|)``,
    which makes the figure an RMS difference independent of the domain size.
    """
    if fine.spec.coarsen() != coarse.spec:
        raise GridMismatch(f"{fine.spec.m}x{fine.spec.n} does not coarsen to "
                           f"{coarse.spec.m}x{coarse.spec.n}")
    return norm(coarse - restrict(fine)) / math.sqrt(coarse.spec.area)


@dataclass(frozen=True)
class ConvergenceRow:
    h_coarse: float
    h_fine: float
    error: float
    rate: Optional[float]


def convergence_study(template, refinement, sizes, t_final=10.0, on_run=None):
    """Successive-difference errors along a refinement path.

    ``refinement`` is ``"quadratic"`` (``s = 0.025 h^2``) or ``"linear"``
    (``s = 0.05 h``); ``sizes`` are cell counts per side, each double the
    previous.  Returns ``(rows, fields)``.
    """
    path = REFINEMENT_PATHS[refinement]
    sizes = list(sizes)
    for a, b in zip(sizes, sizes[1:]):
        if b != 2 * a:
            raise ValueError(f"sizes must double, got {a} then {b}")
    fields = {}
    for N in sizes:
        cfg = replace(template, m=N, n=N, h=None, t_final=t_final, out_dir=None,
                      energy_every=_NEVER, hminus=False)
        h = cfg.grid().h
        cfg = replace(cfg, s=path(h))
        fields[N] = run(cfg).final.phi
        if on_run is not None:
            on_run(N, fields[N])
    rows = []
    for a, b in zip(sizes, sizes[1:]):
        err = cauchy_error(fields[a], fields[b])
        rate = math.log2(rows[-1].error / err) if rows and err > 0 else None
        rows.append(ConvergenceRow(fields[a].spec.h, fields[b].spec.h, err, rate))
    return rows, fields


def geometric_contraction(history):
    """Mean per-cycle reduction ``(r_1 / r_n)^(1/(n-1))``; ``None`` below two cycles."""
    if len(history) < 2 or history[-1] <= 0:
        return None
    return (history[0] / history[-1]) ** (1.0 / (len(history) - 1))


@dataclass
class EfficiencyResult:
    size: int
    h: float
    history: list
    factors: list
    contraction: Optional[float]


def mg_efficiency_study(template, sizes, s=10.0, steps=20):
    """Residual history of the last of ``steps`` second-order steps per grid."""
    results = []
    for N in sizes:
        cfg = replace(template, m=N, n=N, h=None, s=s, t_final=s * steps, scheme="second",
                      out_dir=None, energy_every=_NEVER, hminus=False)
        rep = run(cfg)
        hist = rep.last_history
        factors = [a / b for a, b in zip(hist, hist[1:]) if b > 0]
        results.append(EfficiencyResult(N, cfg.grid().h, hist, factors,
                                        geometric_contraction(hist)))
    return results


def scaled_difference(base, other):
    """``||base - other||_2 / ||base||_2`` for two fields on the same grid."""
    if base.spec != other.spec:
        raise GridMismatch("scaled difference needs fields on identical grids")
    den = norm(base)
    if den == 0:
        raise ZeroDivisionError("base field has zero norm")
    return norm(base - other) / den


@dataclass
class EnergyCheck:
    scheme: str
    s: float
    steps: int
    monotone: bool
    worst_increase: float
    dissipation_defect: Optional[float]
    mass_drift: float
    psi_mean: float
    slack: float
    conserved: bool


def energy_test(template, steps_list, schemes=("first", "second"), pin=None):
    """Monotonicity and conservation sweep.

    ``pin`` is ``None`` (the pinning the template describes), ``"strip"``
    (switch to the crystal-strip data and its pinning) or a
    :class:`~mpfc.scheme.PinningSpec` on the template grid.  For each scheme
    and each ``(s, steps)`` pair the watched energy is the
    pseudo energy (first order) or the modified pseudo energy (second
    order).  ``worst_increase`` is the largest step-to-step rise minus the
    solver slack of that step (negative means monotone with margin).
    """
    from ..energy import dissipation_residual

    out = []
    for scheme in schemes:
        for s, nsteps in steps_list:
            cfg = replace(template, s=s, t_final=s * nsteps, scheme=scheme, energy_every=1,
                          out_dir=None, hminus=True)
            if isinstance(pin, str):
                if pin != "strip":
                    raise ValueError(f"unknown pinning {pin!r}")
                cfg = replace(cfg, init="strip", pin="strip")
            params = cfg.params().with_step(cfg.step_size())
            prev = {}
            defects = []

            def watch(state, res, prev=prev, defects=defects, params=params, cfg=cfg):
                if scheme == "second" and "state" in prev:
                    defects.append(dissipation_residual(prev["state"], state, params,
                                                        cfg.elliptic(), prev["pin"]))
                prev["state"] = state

            phi0, pinspec = initial_state(cfg)
            if pin is not None and not isinstance(pin, str):
                pinspec = pin
            prev["state"] = SchemeState.initial(phi0)
            prev["pin"] = pinspec
            rep = run(cfg, on_step=watch, pin=pinspec)
            key = "pseudo" if scheme == "first" else "modified"
            e = rep.column(key)
            rises = np.diff(e) - np.array(rep.slack)
            mass = rep.column("mass")
            budget = np.arange(1, len(rep.slack) + 1) * np.array(rep.slack)
            drift = np.abs(mass[1:] - mass[0])
            psi_mean = np.abs(rep.column("psi_mean", with_initial=False))
            out.append(EnergyCheck(
                scheme, s, nsteps, bool(np.all(rises <= 0)), float(np.max(rises)),
                max(d - sl for d, sl in zip(defects, rep.slack)) if defects else None,
                float(np.max(drift)), float(np.max(psi_mean)), float(max(rep.slack)),
                bool(np.all(drift <= budget) and np.all(psi_mean <= budget))))
    return out

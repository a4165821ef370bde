import filecmp
import math
import os
import struct

import numpy as np
import pytest

from mpfc.app import cli
from mpfc.app.config import (PRESETS, SimConfig, dump_config, load_config, parse_assignments,
                             parse_config, preset)
from mpfc.app.drivers import (cauchy_error, convergence_study, energy_test,
                              geometric_contraction, initial_state, mg_efficiency_study, run,
                              scaled_difference)
from mpfc.app.initial import (LATTICE_X, Q_T, ROW_SPACING, STRIP_PRESET, benchmark_density,
                              init_benchmark, init_crystal_strip, init_random, init_seeds,
                              single_mode_amplitude)
from mpfc.app.io import (ENERGY_COLUMNS, EnergyRow, read_energy_series, read_field,
                         write_energy_series, write_field)
from mpfc.errors import ComplexAmplitude, DomainMismatch, GridMismatch, NoConvergence
from mpfc.grid import BC, CellField, GridSpec, inner_cell
from mpfc.multigrid import restrict

from conftest import random_field


# -- initial data ---------------------------------------------------------------

def test_benchmark_pointwise():
    spec = GridSpec.square(64, 32.0)
    phi = init_benchmark(spec)
    x, y = spec.centers()
    i, j = 17, 40
    xi, yj = x[i, j], y[i, j]
    direct = (0.07 - 0.02 * math.cos(2 * math.pi * (xi - 12) / 32) * math.sin(2 * math.pi * (yj - 1) / 32)
              + 0.02 * math.cos(math.pi * (xi + 10) / 32) ** 2 * math.cos(math.pi * (yj + 3) / 32) ** 2
              - 0.01 * math.sin(4 * math.pi * xi / 32) ** 2 * math.sin(4 * math.pi * (yj - 6) / 32) ** 2)
    assert phi.interior[i, j] == pytest.approx(direct, rel=0, abs=1e-16)
    assert benchmark_density(xi, yj) == pytest.approx(direct, rel=0, abs=1e-16)


def test_benchmark_mean_and_periodicity():
    # the mean of every trigonometric term is exact on a uniform periodic grid
    for N in (16, 64, 256):
        phi = init_benchmark(GridSpec.square(N, 32.0))
        assert np.mean(phi.interior) == pytest.approx(0.0725, abs=1e-15)
    spec = GridSpec.square(32, 32.0)
    x, y = spec.centers()
    assert np.allclose(benchmark_density(x + 32.0, y - 32.0), benchmark_density(x, y),
                       rtol=0, atol=1e-15)
    with pytest.raises(DomainMismatch):
        init_benchmark(GridSpec.square(32, 16.0))


def test_init_random_contract():
    spec = GridSpec(24, 16, 1.0)
    a = init_random(spec, 0.07, 0.07, seed=5)
    b = init_random(spec, 0.07, 0.07, seed=5)
    assert a.interior.tobytes() == b.interior.tobytes()
    assert np.all(np.abs(a.interior - 0.07) <= 0.07)
    assert not np.array_equal(a.interior, init_random(spec, 0.07, 0.07, seed=6).interior)
    assert np.all(init_random(spec, 0.2, 0.0).interior == 0.2)
    with pytest.raises(ValueError):
        init_random(spec, 0.0, -1.0)


def test_init_seeds_bumps():
    spec = GridSpec(64, 32, 1.0, BC.PERIODIC, BC.NEUMANN)
    phi = init_seeds(spec, mean=0.2, amp=0.3, radius=2.0, sites=[10.0, 63.9])
    assert np.min(phi.interior) >= 0.2
    assert np.allclose(phi.interior[:, -1], 0.2, atol=1e-12)
    # the bump at the right edge wraps around to x = 0
    assert phi.interior[0, 0] > 0.2 + 0.1
    a = init_seeds(spec, sites=3, seed=1)
    assert np.array_equal(a.interior, init_seeds(spec, sites=3, seed=1).interior)


def test_single_mode_amplitude():
    expect = 0.8 * 0.395 + (4 / 15) * math.sqrt(9 - 5.6169)
    assert single_mode_amplitude(0.395, 0.6) == pytest.approx(expect, rel=1e-15)
    assert Q_T == math.sqrt(3) / 2
    with pytest.raises(ComplexAmplitude):
        single_mode_amplitude(0.395, 0.3)


def test_crystal_strip_geometry():
    spec = GridSpec(STRIP_PRESET["m"], STRIP_PRESET["n"], STRIP_PRESET["h"],
                    BC.PERIODIC, BC.NEUMANN)
    assert math.isclose(spec.lx, 32 * LATTICE_X)
    assert math.isclose(ROW_SPACING, 2 * math.pi)
    phi, pin = init_crystal_strip(spec, layers=20, shear_fraction=0.25)
    _, y = spec.centers()
    y0 = 0.5 * (spec.ly - 20 * ROW_SPACING)
    liquid = (y < y0) | (y >= y0 + 20 * ROW_SPACING)
    assert np.all(phi.interior[liquid] == 0.57)
    assert np.all(pin.weight.interior[liquid] == 0.0)
    band = pin.weight.interior > 0
    assert np.all(pin.weight.interior[band] == 2.0)
    # each band is pi high: about pi / h cells per column
    assert abs(band[0].sum() - 2 * math.pi / spec.h) <= 2
    # the top band target is the crystal shifted by a quarter period
    top = band & (y > spec.ly / 2)
    assert not np.allclose(pin.target.interior[top], phi.interior[top])
    bottom = band & (y < spec.ly / 2)
    assert np.array_equal(pin.target.interior[bottom], phi.interior[bottom])
    with pytest.raises(DomainMismatch):
        init_crystal_strip(GridSpec(64, 16, 1.0), layers=20)


# -- file formats ---------------------------------------------------------------

def test_field_round_trip(tmp_path, rng):
    spec = GridSpec(12, 7, 0.3, BC.PERIODIC, BC.NEUMANN)
    f = random_field(spec, rng)
    path = tmp_path / "f.fld"
    write_field(f, path, time=2.5)
    g, t = read_field(path)
    assert g.spec == spec and t == 2.5
    assert g.interior.tobytes() == f.interior.tobytes()
    raw = path.read_bytes()
    assert raw[:8] == b"MPFCFLD\0"
    m, n = struct.unpack_from("<II", raw, 12)
    assert (m, n) == (12, 7)
    assert np.frombuffer(raw, "<f8", count=1, offset=40 + 8 * (3 * 7 + 2))[0] == f.interior[3, 2]


def test_field_read_errors(tmp_path):
    bad = tmp_path / "bad.fld"
    bad.write_bytes(b"NOTAFILE" + bytes(40))
    with pytest.raises(ValueError, match="magic"):
        read_field(bad)
    spec = GridSpec(4, 4, 1.0)
    good = tmp_path / "g.fld"
    write_field(CellField(spec), good)
    good.write_bytes(good.read_bytes()[:-8])
    with pytest.raises(ValueError, match="expected"):
        read_field(good)
    with pytest.raises(OSError, match="missing.fld"):
        read_field(tmp_path / "missing.fld")
    with pytest.raises(OSError, match="nodir"):
        write_field(CellField(spec), tmp_path / "nodir" / "x.fld")


def test_energy_series_round_trip(tmp_path):
    rows = [EnergyRow(k, 0.1 * k, 1.0 / 3 + k, 2.0, 1.0, 0.5, 0.25, 72.5, 1e-17, k, 1e-12)
            for k in range(4)]
    path = tmp_path / "e.csv"
    write_energy_series(rows, path)
    assert path.read_text().splitlines()[0] == ",".join(ENERGY_COLUMNS)
    assert read_energy_series(path) == rows


# -- configuration ----------------------------------------------------------------

def test_config_parsing():
    cfg = parse_config("""
        # comment
        preset = random
        s = 0.05   # trailing comment
        scheme = first
        hminus = no
    """, ["init_seed=7", "h=none"])
    assert cfg.lx == 128.0 and cfg.init == "random"
    assert cfg.s == 0.05 and cfg.scheme == "first" and cfg.hminus is False
    assert cfg.init_seed == 7 and cfg.h is None
    assert parse_config(dump_config(cfg)) == cfg
    with pytest.raises(KeyError):
        parse_assignments(["nope=1"])
    with pytest.raises(ValueError):
        parse_assignments(["s"])
    with pytest.raises(ValueError):
        parse_config("s = 1\npreset = benchmark\n")
    with pytest.raises(ValueError):
        SimConfig(t_final=0.0)
    with pytest.raises(ValueError):
        SimConfig(energy_every=0)
    with pytest.raises(ValueError):
        SimConfig(pin="strip")
    with pytest.raises(ValueError):
        SimConfig(scheme="third")
    with pytest.raises(ValueError):
        SimConfig(ly=10.0).grid()


def test_presets_build():
    for name in PRESETS:
        cfg = preset(name)
        cfg.grid(), cfg.params(), cfg.mg(), cfg.elliptic()
    assert preset("efficiency").steps() == 20
    assert preset("benchmark").grid() == GridSpec.square(128, 32.0)
    with pytest.raises(KeyError):
        preset("nope")


def test_load_config_file(tmp_path):
    p = tmp_path / "a.cfg"
    p.write_text("preset = low-damping\nm = 32\nn = 32\n")
    cfg = load_config(p, ["t_final=1"])
    assert (cfg.beta, cfg.m, cfg.t_final) == (0.01, 32, 1.0)
    with pytest.raises(OSError, match="missing.cfg"):
        load_config(tmp_path / "missing.cfg")


def test_step_count_rounds_up():
    cfg = SimConfig(s=20.0, t_final=350.0)
    assert cfg.steps() == 18
    assert cfg.step_size() == pytest.approx(350.0 / 18)
    assert SimConfig(s=0.1, t_final=10.0).steps() == 100


# -- drivers ------------------------------------------------------------------------

def _small(**kw):
    base = dict(m=32, n=32, s=0.5, t_final=2.0)
    base.update(kw)
    return SimConfig(**base)


def test_run_outputs(tmp_path):
    cfg = _small(out_dir=str(tmp_path / "o"), field_every=2, energy_every=1)
    rep = run(cfg)
    assert rep.steps == 4 and len(rep.rows) == 4
    files = sorted(os.listdir(tmp_path / "o"))
    assert files == ["energy.csv", "phi_0000000.fld", "phi_0000002.fld", "phi_0000004.fld"]
    for k in (0, 2, 4):
        _, t = read_field(tmp_path / "o" / f"phi_{k:07d}.fld")
        assert t == pytest.approx(k * cfg.step_size(), abs=1e-15)
    rows = read_energy_series(tmp_path / "o" / "energy.csv")
    assert [r.step for r in rows] == [0, 1, 2, 3, 4]
    assert rows[1:] == rep.rows
    assert all(r.vcycles > 0 for r in rows[1:])


def test_energy_cadence(tmp_path):
    rep = run(_small(t_final=5.0, energy_every=2, out_dir=str(tmp_path)))
    assert rep.steps == 10 and len(rep.rows) == 10 // 2
    assert len(read_energy_series(tmp_path / "energy.csv")) == 1 + 5


def test_run_is_deterministic(tmp_path):
    cfg = _small(init="random", lx=None, h=1.0, field_every=1)
    run(replace_out(cfg, tmp_path / "a"))
    run(replace_out(cfg, tmp_path / "b"))
    names = sorted(os.listdir(tmp_path / "a"))
    match, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", names,
                                               shallow=False)
    assert mismatch == [] and errors == [] and len(match) == len(names)


def replace_out(cfg, path):
    from dataclasses import replace
    return replace(cfg, out_dir=str(path))


def test_constant_data_stays_put(tmp_path):
    cfg = _small(init="constant", init_mean=0.1, field_every=1, out_dir=str(tmp_path))
    run(cfg)
    first, _ = read_field(tmp_path / "phi_0000000.fld")
    for k in range(1, cfg.steps() + 1):
        f, _ = read_field(tmp_path / f"phi_{k:07d}.fld")
        assert np.allclose(f.interior, first.interior, rtol=0, atol=1e-14)


def test_run_flushes_on_no_convergence(tmp_path):
    cfg = _small(mg_max_vcycles=1, mg_tol=1e-14, out_dir=str(tmp_path))
    with pytest.raises(NoConvergence) as info:
        run(cfg)
    assert info.value.step == 1
    assert os.path.exists(tmp_path / "energy.csv")
    assert os.path.exists(tmp_path / "phi_0000000.fld")
    assert len(read_energy_series(tmp_path / "energy.csv")) == 1


def test_initial_state_pinning_switch():
    cfg = replace_out(preset("strip"), None)
    phi, pin = initial_state(cfg)
    assert pin is not None and phi.spec.m == 512
    from dataclasses import replace
    _, pin = initial_state(replace(cfg, pin="off"))
    assert pin is None


def _mass(f):
    return inner_cell(f, CellField.constant(f.spec, 1.0))


def test_cauchy_error_and_restriction_mass(rng):
    spec = GridSpec.square(32, 32.0)
    fine = random_field(spec, rng)
    assert cauchy_error(restrict(fine), fine) == 0.0
    coarse = CellField.constant(spec.coarsen(), 1.0)
    assert cauchy_error(coarse, CellField(spec)) == pytest.approx(1.0)
    assert _mass(restrict(fine)) == pytest.approx(_mass(fine), rel=1e-14)
    with pytest.raises(GridMismatch):
        cauchy_error(fine, fine)


def test_convergence_study_small():
    rows, fields = convergence_study(SimConfig(), "linear", [16, 32, 64], t_final=1.0)
    assert [r.rate is None for r in rows] == [True, False]
    assert rows[0].h_coarse == 2.0 and rows[1].h_fine == 0.5
    assert rows[1].error < rows[0].error
    masses = [_mass(fields[N]) for N in (16, 32, 64)]
    assert np.allclose(masses, masses[0], rtol=1e-12)
    with pytest.raises(ValueError):
        convergence_study(SimConfig(), "linear", [16, 48])


def test_geometric_contraction():
    assert geometric_contraction([1.0]) is None
    assert geometric_contraction([]) is None
    assert geometric_contraction([1.0, 0.25, 1 / 16]) == pytest.approx(4.0)


def test_mg_efficiency_small():
    (res,) = mg_efficiency_study(SimConfig(), [32], s=10.0, steps=2)
    assert res.size == 32 and res.h == 1.0
    assert len(res.factors) == len(res.history) - 1
    assert res.contraction > 2.0


def test_scaled_difference_properties(rng):
    spec = GridSpec.square(16, 16.0)
    a = random_field(spec, rng)
    b = random_field(spec, rng)
    assert scaled_difference(a, a) == 0.0
    assert scaled_difference(2.0 * a, 2.0 * b) == pytest.approx(scaled_difference(a, b), rel=1e-14)
    with pytest.raises(GridMismatch):
        scaled_difference(a, CellField(GridSpec.square(8, 16.0)))
    with pytest.raises(ZeroDivisionError):
        scaled_difference(CellField(spec), a)


def test_energy_test_small():
    checks = energy_test(_small(), [(1.0, 3)], schemes=("first", "second"))
    assert [c.scheme for c in checks] == ["first", "second"]
    assert all(c.monotone and c.conserved for c in checks)
    assert checks[0].dissipation_defect is None
    assert checks[1].dissipation_defect <= 0


# -- command line ---------------------------------------------------------------------

def test_cli_run(tmp_path, capsys):
    out = tmp_path / "o"
    code = cli.main(["run", "m=16", "n=16", "s=1", "t_final=2", f"out_dir={out}"])
    assert code == 0
    assert "steps 2" in capsys.readouterr().out
    assert (out / "energy.csv").exists() and (out / "phi_0000002.fld").exists()


def test_cli_config_file_and_preset(tmp_path, capsys):
    p = tmp_path / "c.cfg"
    p.write_text("m = 16\nn = 16\nt_final = 1\ns = 1\n")
    assert cli.main(["run", "--preset", "low-damping", str(p), f"out_dir={tmp_path}"]) == 0
    assert "steps 1" in capsys.readouterr().out


def test_cli_exit_codes(tmp_path, capsys):
    code = cli.main(["run", "m=16", "n=16", "s=1", "t_final=2", "mg_max_vcycles=1",
                     "mg_tol=1e-14", f"out_dir={tmp_path}"])
    assert code == cli.EXIT_NO_CONVERGENCE
    assert "step 1" in capsys.readouterr().err
    assert cli.main(["run", "bogus=1"]) == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["--version"])
    assert info.value.code == 0


def test_cli_experiments(capsys):
    assert cli.main(["converge", "--sizes", "16", "32", "--t-final", "0.5"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "h_coarse,h_fine,error,rate" and len(out) == 2
    assert cli.main(["mg-bench", "--sizes", "16", "--steps", "1"]) == 0
    assert "# size 16" in capsys.readouterr().out
    assert cli.main(["energy-test", "m=16", "n=16", "--s", "1", "--steps", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3 and lines[1].startswith("first,1,2,True")

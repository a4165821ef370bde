"""Command-line entry point ``mpfc``.

Every subcommand takes an optional config file followed by ``key=value``
overrides, e.g. ``mpfc run my.cfg s=0.05 out_dir=out``.
"""

import argparse
import sys
from dataclasses import replace

from .. import __version__
from ..errors import MPFCError, NoConvergence
from .config import PRESETS, load_config, parse_config
from .drivers import convergence_study, energy_test, mg_efficiency_study, run

EXIT_NO_CONVERGENCE = 3


def _split(items):
    path = None
    overrides = []
    for it in items:
        if "=" in it:
            overrides.append(it)
        elif path is None:
            path = it
        else:
            raise SystemExit(f"unexpected argument {it!r} (only one config file allowed)")
    return path, overrides


def _config(args):
    path, overrides = _split(args.config)
    if args.preset is None:
        return load_config(path, overrides)
    text = f"preset = {args.preset}\n"
    if path is not None:
        with open(path) as fh:
            text += fh.read()
    return parse_config(text, overrides)


def cmd_run(args):
    cfg = _config(args)
    if cfg.out_dir is None:
        cfg = replace(cfg, out_dir=args.default_out)
    rep = run(cfg)
    last = rep.rows[-1] if rep.rows else rep.initial
    print(f"steps {rep.steps}  s {rep.step_size:.6g}  t {rep.final.t:.6g}  "
          f"v-cycles {rep.vcycles}")
    print(f"F {last.F:.12g}  pseudo {last.pseudo:.12g}  modified {last.modified:.12g}  "
          f"mass {last.mass:.12g}")
    print("timings " + "  ".join(f"{k} {v:.2f}s" for k, v in rep.timings.items()))
    print(f"output in {cfg.out_dir}")


def cmd_converge(args):
    cfg = _config(args)
    rows, _ = convergence_study(cfg, args.refinement, args.sizes, args.t_final)
    print("h_coarse,h_fine,error,rate")
    for r in rows:
        rate = "" if r.rate is None else f"{r.rate:.4f}"
        print(f"{r.h_coarse:.6g},{r.h_fine:.6g},{r.error:.4e},{rate}")


def cmd_mg_bench(args):
    cfg = _config(args)
    results = mg_efficiency_study(cfg, args.sizes, s=args.s, steps=args.steps)
    print("size,h,cycle,residual,contraction")
    for res in results:
        prev = None
        for i, r in enumerate(res.history, 1):
            c = "" if prev is None else f"{prev / r:.4f}"
            print(f"{res.size},{res.h:.6g},{i},{r:.6e},{c}")
            prev = r
    for res in results:
        c = "n/a" if res.contraction is None else f"{res.contraction:.3f}"
        print(f"# size {res.size}: mean contraction {c}")


def cmd_energy_test(args):
    cfg = _config(args)
    pairs = [(s, args.steps) for s in args.s]
    checks = energy_test(cfg, pairs, schemes=args.schemes,
                         pin="strip" if args.pin else None)
    ok = True
    print("scheme,s,steps,monotone,worst_increase,dissipation_defect,mass_drift,psi_mean,conserved")
    for c in checks:
        d = "" if c.dissipation_defect is None else f"{c.dissipation_defect:.3e}"
        print(f"{c.scheme},{c.s:g},{c.steps},{c.monotone},{c.worst_increase:.3e},{d},"
              f"{c.mass_drift:.3e},{c.psi_mean:.3e},{c.conserved}")
        ok &= c.monotone and c.conserved and (c.dissipation_defect is None
                                              or c.dissipation_defect <= 0)
    return 0 if ok else 1


def build_parser():
    p = argparse.ArgumentParser(prog="mpfc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"mpfc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", nargs="*", help="config file and/or key=value overrides")
        sp.add_argument("--preset", choices=sorted(PRESETS), help="start from a preset")

    sp = sub.add_parser("run", help="integrate one configuration")
    common(sp)
    sp.add_argument("--default-out", default="mpfc_out",
                    help="output directory when the config sets none")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("converge", help="successive-difference refinement study")
    common(sp)
    sp.add_argument("--refinement", choices=("quadratic", "linear"), default="linear")
    sp.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128])
    sp.add_argument("--t-final", type=float, default=10.0)
    sp.set_defaults(func=cmd_converge)

    sp = sub.add_parser("mg-bench", help="V-cycle residual histories at the last step")
    common(sp)
    sp.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    sp.add_argument("--s", type=float, default=10.0)
    sp.add_argument("--steps", type=int, default=20)
    sp.set_defaults(func=cmd_mg_bench)

    sp = sub.add_parser("energy-test", help="energy monotonicity and conservation sweep")
    common(sp)
    sp.add_argument("--s", type=float, nargs="+", default=[0.01, 0.1, 1.0, 10.0, 100.0])
    sp.add_argument("--steps", type=int, default=100)
    sp.add_argument("--schemes", nargs="+", choices=("first", "second"),
                    default=["first", "second"])
    sp.add_argument("--pin", action="store_true", help="use the pinned crystal strip")
    sp.set_defaults(func=cmd_energy_test)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args) or 0
    except NoConvergence as exc:
        print(f"error: no convergence at step {exc.step}: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (MPFCError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

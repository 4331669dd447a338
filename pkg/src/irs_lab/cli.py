"""Command-line entry point: ``irs-lab {sweep, dof-check, oc-angle}``.

Exit codes: 0 success, 1 configuration or usage error, 2 runtime error.
"""

import argparse
import json
import sys
from pathlib import Path

from .channels import SystemConfig
from .dof import dof_report, oc_angle
from .exceptions import ConfigError, IRSLabError
from .harness import SweepSpec, emit_csv, emit_svg_plot, recipe_names, run_sweep


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; usage errors are config errors here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _cmd_sweep(args):
    spec = SweepSpec.load(args.spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.spec).stem
    result = run_sweep(spec, workers=args.workers,
                       diagnostics=args.dump_solution or args.dump_power)
    csv_path = emit_csv(result, out / f"{stem}.csv")
    svg_path = emit_svg_plot(result, out / f"{stem}.svg")
    print(f"wrote {csv_path}")
    print(f"wrote {svg_path}")
    if args.dump_solution:
        p = out / f"{stem}.solutions.json"
        p.write_text(json.dumps([{k: d[k] for k in ("value", "method", "irs", "solution")}
                                 for d in result.diagnostics], indent=1), encoding="utf-8")
        print(f"wrote {p}")
    if args.dump_power:
        p = out / f"{stem}.power.json"
        p.write_text(json.dumps([{k: d[k] for k in ("value", "method", "irs", "average_receive_power")}
                                 for d in result.diagnostics], indent=1), encoding="utf-8")
        print(f"wrote {p}")
    for e in result.errors:
        print(f"cell {e['method']} / {e['irs']} IRS at {e['value']:g}: {e['error']}", file=sys.stderr)
    return 0


def _cmd_dof_check(args):
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    cfg = SystemConfig.from_json(text)
    report = dof_report(cfg, trials=args.trials, seed=args.seed, theta=args.theta)
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def _cmd_oc_angle(args):
    print(f"{oc_angle(args.theta, args.i, args.m, args.d_over_lambda):.4f}")
    return 0


def build_parser():
    p = _Parser(prog="irs-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("sweep", help="run a Monte-Carlo sweep and write CSV + SVG")
    s.add_argument("--spec", required=True,
                   help=f"sweep spec JSON file or built-in recipe ({', '.join(recipe_names())})")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--workers", type=int, default=None, help="process count (default: all CPUs)")
    s.add_argument("--dump-solution", action="store_true",
                   help="write the first-trial beamformers of every cell as JSON")
    s.add_argument("--dump-power", action="store_true",
                   help="write the first-trial receive-power diagnostic of every cell as JSON")
    s.set_defaults(func=_cmd_sweep)

    d = sub.add_parser("dof-check", help="measure effective-channel ranks against the DoF bound")
    d.add_argument("--config", required=True, help="SystemConfig JSON file")
    d.add_argument("--trials", type=int, default=100)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--theta", choices=("random", "zero"), default="random")
    d.set_defaults(func=_cmd_dof_check)

    o = sub.add_parser("oc-angle", help="departure angle satisfying the orthogonality condition")
    o.add_argument("--theta", type=float, required=True, help="reference angle in degrees")
    o.add_argument("--i", type=int, required=True, help="integer offset")
    o.add_argument("--m", type=int, required=True, help="array size")
    o.add_argument("--d-over-lambda", type=float, default=0.5, help="element spacing in wavelengths")
    o.set_defaults(func=_cmd_oc_angle)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except IRSLabError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

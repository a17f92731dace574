"""``bench`` command line: run, sweep, regress, cost, verify.

Exit codes: 0 success, 1 configuration error, 2 verification failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from ..costmodel import cost
from ..errors import ConfigurationError, ConvPrimError
from ..layer import GROUPED, KIND_ALIASES, LayerSpec
from .harness import DEFAULT_REPEATS, emit_csv, read_csv, regress, run_experiment, run_sweep
from .plan import GRID, load_plan
from .verify import verify

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_IO = 0, 1, 2, 3

PRIMITIVE_CHOICES = ("standard", "grouped", "dwsep", "shift", "add")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bench", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run one benchmark-grid experiment for one primitive")
    p.add_argument("--experiment", type=int, required=True, choices=sorted(GRID))
    p.add_argument("--primitive", required=True, choices=PRIMITIVE_CHOICES)
    p.add_argument("--path", required=True, choices=("ref", "fast"))
    p.add_argument("--repeats", type=int, default=DEFAULT_REPEATS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", help="run every plan in a plan file")
    p.add_argument("--plan", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--repeats", type=int, help="override the plan file's repeats")

    p = sub.add_parser("regress", help="least-squares fit over a bench CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--x", default="macs", choices=("macs", "latency"))
    p.add_argument("--y", default="latency", choices=("latency",))
    p.add_argument("--path", choices=("ref", "fast"), help="only rows on this path")
    p.add_argument("--primitive", choices=PRIMITIVE_CHOICES, help="only rows of this primitive")

    p = sub.add_parser("cost", help="print parameter and MAC counts for one layer")
    p.add_argument("--kind", required=True, choices=PRIMITIVE_CHOICES)
    p.add_argument("--kernel", type=int, required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--in-ch", type=int, required=True)
    p.add_argument("--out-ch", type=int, required=True)
    p.add_argument("--groups", type=int, default=1)

    p = sub.add_parser("verify", help="fast path vs reference bit-exactness")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cases", type=int, default=500)
    p.add_argument("--quiet", action="store_true", help="only print failures and the summary")
    return parser


def _cmd_run(args) -> int:
    records = run_experiment(GRID[args.experiment], args.primitive, args.path,
                             args.repeats, args.seed)
    emit_csv(records, args.out)
    print(f"wrote {len(records)} rows to {args.out}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = load_plan(args.plan)
    if args.repeats is not None:
        cfg.repeats = args.repeats
    records = run_sweep(cfg)
    emit_csv(records, args.out)
    print(f"wrote {len(records)} rows to {args.out}")
    return EXIT_OK


def _cmd_regress(args) -> int:
    records = read_csv(args.infile)
    if args.path:
        records = [r for r in records if r.path == args.path]
    if args.primitive:
        kind = KIND_ALIASES[args.primitive]
        records = [r for r in records if r.primitive == kind]
    res = regress(records, args.x, args.y)
    print(f"x={res.x_name} y={res.y_name} n={res.n}")
    print(f"slope={res.slope!r} intercept={res.intercept!r} r2={res.r2:.6f}")
    return EXIT_OK


def _cmd_cost(args) -> int:
    kind = KIND_ALIASES[args.kind]
    spec = LayerSpec(kind, args.width, args.in_ch, args.out_ch, args.kernel,
                     groups=args.groups if kind == GROUPED else 1)
    for key, value in cost(spec).as_dict().items():
        print(f"{key}: {value}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    failed = 0
    total = 0
    for res in verify(args.cases, args.seed):
        total += 1
        s = res.spec
        line = (f"{s.kind:<20} k={s.kernel} w={s.input_width} cin={s.in_channels} "
                f"cout={s.out_channels} g={s.groups}")
        if not res.ok:
            failed += 1
            print(f"FAIL {line} ({res.mismatches} mismatches)")
        elif not args.quiet:
            print(f"pass {line}")
    print(f"{total - failed}/{total} cases bit-exact")
    return EXIT_OK if failed == 0 else EXIT_VERIFY


COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "regress": _cmd_regress,
    "cost": _cmd_cost,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as e:
        print(f"bench: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvPrimError as e:
        print(f"bench: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"bench: I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

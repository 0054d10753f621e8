"""Command-line entry point: ``cbhrp simulate | sweep | compare``.

Exit codes: 0 success, 2 bad arguments or config (message names the line and
field), 3 output not writable.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import sys
from pathlib import Path

from .experiments import (
    DEFAULT_REPLICATES,
    Figure,
    compare_leach,
    default_spec,
    sweep,
    write_compare_csv,
    write_sweep_csv,
)
from .model import ConfigError, NetworkConfig, load_config
from .sim import Stop, lifetime_metrics, simulate, write_trace_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_OUTPUT = 3

FIGURES = [f.value for f in Figure if f is not Figure.LIFETIME_COMPARE]


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load(path: str | None) -> NetworkConfig:
    if path is None:
        return NetworkConfig()
    try:
        return load_config(path)
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror}", EXIT_CONFIG) from None
    except ConfigError as exc:
        raise CliError(f"config error in {path}: {exc}", EXIT_CONFIG) from None


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc.strerror}", EXIT_OUTPUT) from None


def _stop(text: str) -> Stop:
    try:
        return Stop.parse(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"invalid stop {text!r}; use first-death, half-dead, all-dead or max-rounds:N"
        ) from None


def cmd_simulate(args) -> int:
    config = _load(args.config)
    trace = simulate(config, args.seed, args.stop)
    buf = io.StringIO()
    write_trace_csv(trace, buf)
    _emit(buf.getvalue(), args.out)
    fnd, hnd, lnd = lifetime_metrics(trace)
    # landmarks go to stderr when the CSV itself is on stdout
    stream = sys.stderr if args.out in (None, "-") else sys.stdout

    def show(v):
        return "not-reached" if v is None else str(v)

    print(f"generator={trace.generator} seed={args.seed} rounds={len(trace.rounds)}", file=stream)
    print(f"fnd={show(fnd)} hnd={show(hnd)} lnd={show(lnd)}", file=stream)
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _load(args.config)
    spec = default_spec(args.figure, config, args.replicates, args.seed)
    rows = sweep(spec, workers=args.workers)
    buf = io.StringIO()
    write_sweep_csv(rows, buf)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    config = _load(args.config)
    rows = compare_leach(config, args.replicates, args.seed, workers=args.workers)
    buf = io.StringIO()
    write_compare_csv(rows, buf)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cbhrp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file (defaults if omitted)")
    common.add_argument("--seed", type=int, default=1, help="RNG seed (default 1)")
    common.add_argument("--out", help="output CSV path (default stdout)")

    p = sub.add_parser("simulate", parents=[common], help="run to a stop criterion, write the trace CSV")
    p.add_argument("--stop", type=_stop, default=Stop.parse("all-dead"),
                   help="first-death | half-dead | all-dead | max-rounds:N (default all-dead)")
    p.set_defaults(func=cmd_simulate)

    batch = argparse.ArgumentParser(add_help=False)
    batch.add_argument("--replicates", type=int, default=DEFAULT_REPLICATES)
    batch.add_argument("--workers", type=int, default=1, help="parallel processes")

    p = sub.add_parser("sweep", parents=[common, batch], help="parameter sweep for one figure")
    p.add_argument("--figure", choices=FIGURES, default="fig2")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", parents=[common, batch], help="LEACH vs CBHRP on paired seeds")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "replicates", 1) < 1:
        parser.error("--replicates must be >= 1")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"cbhrp: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CliError as exc:
        print(f"cbhrp: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    with contextlib.suppress(BrokenPipeError):
        sys.exit(main())

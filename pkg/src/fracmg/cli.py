"""Command-line front end.

Subcommands::

    fracmg assemble --preset example1 --levels 4..6 --cache-dir .cache
    fracmg solve    --preset example1 --levels 5
    fracmg bench    --preset example2 --levels 4..5 --solvers vcycle,pcg
    fracmg timing   --preset example1 --levels 5..7 --out timing.dat

Exit status: 0 on success, 1 if any solve failed, 2 on configuration errors.
"""

import argparse
import json
import logging
import sys

from .bench import PRESETS, RunConfig, emit_timing_series, prepare_solver, run_benchmark, write_rows
from .errors import ConfigError

log = logging.getLogger("fracmg")


def _levels(text):
    if ".." in text:
        a, b = text.split("..", 1)
        return int(a), int(b)
    return int(text), int(text)


def _config(args):
    data = {}
    if args.preset:
        if args.preset not in PRESETS:
            raise ConfigError(f"unknown preset {args.preset!r}")
        data.update(json.loads(json.dumps(PRESETS[args.preset])))
    if args.config:
        try:
            with open(args.config) as fh:
                data.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    try:
        if args.levels:
            data["levels"] = _levels(args.levels)
    except ValueError as exc:
        raise ConfigError(f"bad --levels {args.levels!r}") from exc
    if args.solvers is not None:
        data["solvers"] = [s for s in args.solvers.split(",") if s]
    for key in ("tol", "cache_dir", "out", "format"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    try:
        return RunConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _parser():
    parser = argparse.ArgumentParser(prog="fracmg", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--preset", help="example1 or example2")
    common.add_argument("--levels", help="finest level or range a..b")
    common.add_argument("--solvers", help="comma list from vcycle,pcg,cg")
    common.add_argument("--tol", type=float)
    common.add_argument("--cache-dir", dest="cache_dir")
    common.add_argument("--out")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("assemble", parents=[common], help="populate the generator cache")
    sub.add_parser("solve", parents=[common], help="solve one configuration at one level")
    sub.add_parser("bench", parents=[common], help="iteration/timing table over a level range")
    sub.add_parser("timing", parents=[common], help="per-iteration time series with log-log slope")
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _config(args)
        if args.command == "assemble":
            for J in range(cfg.levels[0], cfg.levels[1] + 1):
                prepare_solver(cfg, J)
            return 0
        if args.command == "solve" and cfg.levels[0] != cfg.levels[1]:
            raise ConfigError("solve takes a single level")
        if args.command == "timing" and args.solvers is None:
            cfg.solvers = ("vcycle",)
        rows = run_benchmark(cfg)
        if args.command == "timing":
            text, _ = emit_timing_series(rows, cfg.out, cfg.solvers[0] if cfg.solvers else "vcycle")
            if cfg.out is None:
                sys.stdout.write(text)
        else:
            text = write_rows(rows, cfg.out, cfg.format)
            if cfg.out is None:
                sys.stdout.write(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0 if all(r.converged for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())

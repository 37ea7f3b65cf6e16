"""Command-line front end: ``fdppr run|table|fields``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, FdpprError, NumericalError
from .experiments import (ExperimentConfig, RunFailed, dump_fields_from_run, format_table,
                          read_config_file, render_table, run_experiment)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

OVERRIDES = (("problem", "problem"), ("r", "r"), ("resolutions", "resolutions"), ("cfl", "cfl"),
             ("T", "T"), ("norm", "norm"), ("reference", "reference"), ("out", "out"))


def build_parser():
    p = argparse.ArgumentParser(prog="fdppr", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a convergence study")
    run.add_argument("config", nargs="?", help="flat key = value config file")
    for flag, _ in OVERRIDES:
        run.add_argument(f"--{flag}")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="any other config key")
    run.add_argument("--cell-dump", action="store_true", help="write per-cell field CSVs")

    table = sub.add_parser("table", help="print a run's table")
    table.add_argument("run_dir")
    table.add_argument("--norm")
    table.add_argument("--group")

    fields = sub.add_parser("fields", help="write a per-cell field dump for a finished run")
    fields.add_argument("run_dir")
    fields.add_argument("--cell-dump", action="store_true", required=True)
    fields.add_argument("--resolution", help="default: the finest of the run")
    fields.add_argument("--output")
    return p


def _config(args):
    mapping = read_config_file(args.config) if args.config else {}
    for flag, key in OVERRIDES:
        val = getattr(args, flag)
        if val is not None:
            mapping[key] = val
    for item in args.set:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        mapping[key.strip()] = val.strip()
    if args.cell_dump:
        mapping["dump_fields"] = "true"
    return ExperimentConfig.from_mapping(mapping)


def _dispatch(args):
    if args.command == "run":
        record = run_experiment(_config(args))
        sys.stdout.write(format_table(record.rows, record.wave))
    elif args.command == "table":
        sys.stdout.write(render_table(args.run_dir, args.norm, args.group))
    else:
        path = dump_fields_from_run(args.run_dir, args.resolution, args.output)
        print(path)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _dispatch(args)
    except RunFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL if isinstance(exc.cause, NumericalError) else EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FdpprError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: ``selcoop run|preset|validate``."""

import argparse
import sys
from dataclasses import replace

from . import __version__
from .experiment import PRESET_TEXT, ConfigError, load_config, preset, run_experiment, serialize_config


def _add_run_flags(p):
    p.add_argument("--trials", type=int, help="Monte Carlo trials per grid point")
    p.add_argument("--seed", type=int, help="base seed of the random streams")
    p.add_argument("--out", help="CSV output path (default: config 'output', else stdout)")
    p.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="selcoop",
        description="Selection amplify-and-forward relaying: bounds vs Monte Carlo sweeps.")
    parser.add_argument("--version", action="version", version=f"selcoop {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config file")
    p.add_argument("config")
    _add_run_flags(p)

    p = sub.add_parser("preset", help="run a figure preset")
    p.add_argument("name", choices=sorted(PRESET_TEXT, key=lambda s: int(s[3:])))
    _add_run_flags(p)

    p = sub.add_parser("validate", help="check a config file and print it normalized")
    p.add_argument("config")
    return parser


def _execute(cfg, args, out):
    overrides = {k: v for k, v in (("trials", args.trials), ("seed", args.seed),
                                   ("output", args.out)) if v is not None}
    cfg = replace(cfg, **overrides)
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    res = run_experiment(cfg, threads=args.threads)
    for note in res.notes:
        print(note, file=sys.stderr if cfg.output is None else out)
    if cfg.output is None:
        out.write(res.csv_text)
    else:
        print(f"wrote {len(res.rows)} rows to {cfg.output}", file=out)


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            cfg = load_config(args.config)
            out.write(serialize_config(cfg))
        elif args.command == "run":
            _execute(load_config(args.config), args, out)
        else:
            _execute(preset(args.name), args, out)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: one subcommand per experiment kind plus ``list`` and ``validate``."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigurationError, EmptyNeighborhoodError, EscapeError, NumericalError
from .runner import KINDS, ExperimentConfig, ValidationError, list_experiments, run, validate

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opengap", description="Open hyperbolic map experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list the experiment catalog")
    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("--config", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", help="INI config file (defaults from the catalog when omitted)")
        p.add_argument("--out-dir", default=f"results/{kind}")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a parameter, e.g. --set n_max=8")
    return parser


def _load(args, kind: str) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config, kind) if args.config else ExperimentConfig.default(kind)
    if args.seed is not None:
        cfg.seed = args.seed
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ValidationError({f"--set {item}": "expected KEY=VALUE"})
        cfg.parameters[key.strip()] = value.strip()
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "list":
            for entry in list_experiments():
                print(f"{entry.name:16s} {entry.kind:11s} {entry.anchor}")
            return EXIT_OK
        if args.command == "validate":
            cfg = ExperimentConfig.from_file(args.config)
            for note in validate(cfg):
                print(f"warning: {note}")
            print(f"ok: {cfg.kind} config hash {cfg.with_defaults().hash()}")
            return EXIT_OK
        cfg = _load(args, args.command)
        manifest = run(cfg, args.out_dir, workers=args.workers)
        for note in manifest.warnings:
            print(f"warning: {note}", file=sys.stderr)
        print(json.dumps(manifest.as_dict(), indent=2))
        return EXIT_OK
    except (ValidationError, ConfigurationError, FileNotFoundError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, EscapeError, EmptyNeighborhoodError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())

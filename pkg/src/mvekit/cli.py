"""Command-line entry point.

Subcommands: control, sweep, regression, correlation.
Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

import argparse
import sys
from pathlib import Path

from . import harness
from .harness import ConfigError


def _add_common(parser):
    parser.add_argument("--config", type=str, default=None, help="config file path")
    parser.add_argument("--seed", type=int, default=0, help="base random seed")
    parser.add_argument("--seeds", type=int, default=None, help="number of seeded runs")
    parser.add_argument("--out", type=str, default="runs", help="output directory")
    parser.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config field (repeatable; applied after --config)",
    )


def build_parser():
    parser = argparse.ArgumentParser(prog="mvekit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("control", "sweep", "regression", "correlation"):
        _add_common(sub.add_parser(name))
    return parser


def _load_config(args, kind, defaults=None):
    base_map, grid = {}, {}
    if args.config:
        base_map, grid = harness.parse_config_file(args.config)
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        base_map[key.strip()] = value.strip()
    base_map.setdefault("kind", kind)
    for key, value in (defaults or {}).items():
        base_map.setdefault(key, value)
    config = harness.config_from_mapping(base_map)
    if args.seeds is not None:
        config = harness.config_from_mapping({"seeds": str(args.seeds)}, base=config)
    return config, grid


def _run_many(config, args, out_dir, runner, name_fn):
    jobs = [
        (config, args.seed + i, out_dir / name_fn(config, args.seed + i))
        for i in range(config.seeds if args.seeds is not None else 1)
    ]
    logs = harness.run_jobs(runner, jobs, workers=args.workers)
    for _, _, path in jobs:
        print(f"wrote {path}")
    return logs


def main(argv=None):
    args = build_parser().parse_args(argv)
    out_dir = Path(args.out)
    try:
        if args.command == "control":
            config, grid = _load_config(args, kind="control")
            if grid:
                raise ConfigError("sweep.* lines need the `sweep` subcommand")
            _run_many(config, args, out_dir, harness.run_control, harness.control_csv_name)
        elif args.command == "correlation":
            config, grid = _load_config(
                args,
                kind="correlation",
                defaults={"agent": "selective-mve", "weighting": "combined", "model_hidden": "4"},
            )
            if grid:
                raise ConfigError("sweep.* lines need the `sweep` subcommand")
            _run_many(config, args, out_dir, harness.run_correlation, harness.control_csv_name)
        elif args.command == "regression":
            config, grid = _load_config(args, kind="regression")
            if grid:
                raise ConfigError("sweep.* lines need the `sweep` subcommand")
            _run_many(config, args, out_dir, harness.run_regression, harness.regression_csv_name)
        elif args.command == "sweep":
            config, grid = _load_config(args, kind="control")
            result = harness.run_sweep(
                config, grid, out_dir=out_dir, workers=args.workers, base_seed=args.seed
            )
            print(f"best config index: {result.best_index}")
            for name in grid:
                print(f"  {name} = {getattr(result.best_config, name)}")
            print(f"score: {result.scores[result.best_index]}")
            if result.boundary_flag:
                print(f"WARNING: winner on sweep boundary: {', '.join(result.boundary_fields)}")
            print(f"wrote {out_dir / 'sweep_summary.csv'}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

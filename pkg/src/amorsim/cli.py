"""Command line entry point: `amorsim <scenario> [options]`.

Exit codes: 0 success, 2 invalid configuration, 3 bad or insufficient data,
4 numerical failure, 5 validation suite reported failures, 1 anything else.
"""
from __future__ import annotations

import argparse
import sys

from . import scenarios
from .config import (ExperimentConfig, apply_overrides, load_config,
                     load_preset, PRESETS)
from .core import (AmorsimError, ConfigError, DataError, NumericError,
                   TOOL_VERSION)

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4
EXIT_VALIDATION = 5


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amorsim",
        description="Deterministic simulator of an amplitude-modulated "
                    "optical-rotation magnetometer with a squeezed or "
                    "coherent probe.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {TOOL_VERSION}")
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name in scenarios.SCENARIO_NAMES:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument("--config", metavar="PATH",
                       help="JSON configuration file")
        p.add_argument("--preset", metavar="NAME",
                       choices=sorted(PRESETS), default="paper-default",
                       help="named preset when --config is absent "
                            "(default: %(default)s)")
        p.add_argument("--seed", type=int, metavar="U64",
                       help="override detection.rng_seed")
        p.add_argument("--set", action="append", default=[],
                       metavar="SECTION.FIELD=VALUE", dest="overrides",
                       help="config override, repeatable")
        p.add_argument("--out", metavar="DIR", default=None,
                       help="output directory (default: runs/<scenario>)")
        if name == "validate":
            p.add_argument("--max-substeps", type=int, default=None,
                           metavar="N",
                           help="cap integrator substeps to demonstrate the "
                                "failure mode of an over-coarse step")
    return parser


def _load_base_config(args) -> ExperimentConfig:
    if args.config is not None:
        return load_config(args.config)
    return load_preset(args.preset)


def _print_summary(summary: dict) -> None:
    for key, value in summary.items():
        if key == "lines":
            for line in value:
                print(line)
        else:
            print(f"{key}: {value}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_base_config(args)
        overrides = list(args.overrides)
        if args.seed is not None:
            overrides.append(f"detection.rng_seed={args.seed}")
        out_dir = args.out if args.out is not None else f"runs/{args.scenario}"
        scenario = scenarios.Scenario(name=args.scenario, config=cfg,
                                      overrides=tuple(overrides),
                                      output_dir=out_dir)
        kwargs = {}
        if args.scenario == "validate" and args.max_substeps is not None:
            kwargs["max_substeps"] = args.max_substeps
        manifest = scenarios.run_scenario(scenario, **kwargs)
    except ConfigError as exc:
        print(f"amorsim {args.scenario}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"amorsim {args.scenario}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"amorsim {args.scenario}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except AmorsimError as exc:
        print(f"amorsim {args.scenario}: {exc}", file=sys.stderr)
        return EXIT_OTHER

    print(f"scenario: {manifest.scenario}")
    print(f"output: {scenario.output_dir}")
    print(f"config_hash: {manifest.config_hash}")
    print(f"seed: {manifest.seed}")
    _print_summary(manifest.summary)
    for name, digest in manifest.artifacts:
        print(f"wrote {name} ({digest[:12]})")
    if args.scenario == "validate" and not manifest.summary.get("passed"):
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

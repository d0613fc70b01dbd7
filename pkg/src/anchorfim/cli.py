"""Command-line entry point.

Exit codes: 0 success, 2 config error, 3 degenerate geometry, 4 a
verification check (``verify`` / ``appendix``) failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .config import RunConfig, load_config
from .errors import ConfigError, DegenerateGeometryError, InvalidArgumentError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GEOMETRY = 3
EXIT_CHECK_FAILED = 4


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_table(cfg: RunConfig, args) -> int:
    rows = harness.build_table(cfg)
    _emit(harness.table_json(cfg, rows), args.out)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    _emit(harness.sweep_csv(harness.sweep_nu(cfg)), args.out)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    report = harness.verify_derivatives(cfg)
    sys.stdout.write(_dump(report.as_dict()))
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_appendix(cfg: RunConfig, args) -> int:
    result = harness.appendix_check(cfg.updated(regime="far", plan="identity"))
    sys.stdout.write(_dump(result.as_dict()))
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


def cmd_info(cfg: RunConfig, args) -> int:
    sys.stdout.write(_dump(harness.link_info(cfg)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anchorfim",
        description="Fisher information for single-link position/orientation estimation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table", help="identifiability of each unknown-parameter combination (JSON)")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("sweep", help="PEB/OEB against destination array size (CSV)")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="analytic vs finite-difference Jacobians")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("appendix", help="far-field source orientation without beamforming")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_appendix)

    p = sub.add_parser("info", help="Fraunhofer distance, link distance and regime")
    p.add_argument("--config")
    p.set_defaults(func=cmd_info)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        return args.func(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateGeometryError as exc:
        print(f"degenerate geometry: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except InvalidArgumentError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

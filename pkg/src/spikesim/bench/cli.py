"""``bench <workload> --out DIR [--config FILE] [--seed N] [--override key=value ...]``"""

from __future__ import annotations

import argparse
import json
import sys

from ..network import NetworkError
from ..spectral import UndefinedCorrelationError
from .config import WORKLOADS, ConfigError, load_file, parse_override, resolve
from .workloads import dump_json, run_workload

EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bench",
        description="Run a seeded spiking-network benchmark workload and write CSV/JSON reports.",
    )
    parser.add_argument("workload", choices=WORKLOADS)
    parser.add_argument("--config", help="JSON config file: {\"seed\": N, \"params\": {...}}")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, help="overrides the config seed")
    parser.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="set one workload parameter; VALUE is parsed as JSON when possible",
    )
    return parser


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": {"type": kind, "message": message}}) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = load_file(args.config) if args.config else None
        overrides = [parse_override(o) for o in args.override]
        config = resolve(args.workload, doc, args.seed, overrides)
    except ConfigError as exc:
        return _fail("config_error", str(exc), EXIT_CONFIG)
    try:
        report = run_workload(config, args.out)
    except UndefinedCorrelationError as exc:
        return _fail("undefined_correlation", str(exc), EXIT_RUNTIME)
    except NetworkError as exc:
        return _fail("network_error", str(exc), EXIT_RUNTIME)
    except ValueError as exc:
        return _fail("invalid_input", str(exc), EXIT_RUNTIME)
    except OSError as exc:
        return _fail("io_error", f"{exc.filename}: {exc.strerror}", EXIT_RUNTIME)
    sys.stdout.write(dump_json(report["results"]) if args.workload != "stft-chirp" else dump_json(
        {k: v for k, v in report["results"].items() if k != "freqs_hz"}
    ))
    return 0


if __name__ == "__main__":
    sys.exit(main())

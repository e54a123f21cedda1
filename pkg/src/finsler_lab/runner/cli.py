"""Command-line entry point: ``finsler-lab {classify,validate,rigidity,catalog}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from ..errors import ConfigError, FinslerError
from ..profiles import CATALOG
from .config import RunConfig, config_from_dict
from .report import emit_report
from .suites import exit_code, run_suites

EXIT_CONFIG = 2
EXIT_DOMAIN = 3


def _param(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"parameter {name!r} needs a numeric value, got {value!r}") from None


def _scan_or_float(text: str):
    if text == "scan":
        return "scan"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'scan', got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="finsler-lab",
                                     description="Curvature and flatness checks for metrics F = |y| psi(|x|, <x,y>/|y|).")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("catalog", help="list built-in profiles with their formulas")

    for name, help_text in (("classify", "evaluate the six classification flags"),
                            ("validate", "cross-check closed forms against the general oracles"),
                            ("rigidity", "run the flatness and isotropy rigidity chain")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="JSON config file; flags below override its keys")
        p.add_argument("--metric", help="built-in profile name")
        p.add_argument("--psi", help="inline profile expression in r and s")
        p.add_argument("--param", type=_param, action="append", default=[], metavar="NAME=VALUE",
                       help="numeric parameter for --psi or riemann_sqrt (repeatable)")
        p.add_argument("--r-max", type=float, help="domain bound r < R for an inline profile")
        p.add_argument("--n", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--r-range", type=float, nargs=2, metavar=("R_MIN", "R_MAX"))
        p.add_argument("--k1", type=_scan_or_float)
        p.add_argument("--c", type=_scan_or_float)
        p.add_argument("--k-fn", help="k(r) expression; with --metric riemann_sqrt it is also the profile's k")
        p.add_argument("--k2-fn", help="k2(r) expression; with --metric riemann_sqrt it is also the profile's k2")
        p.add_argument("--tolerance-zero", type=float)
        p.add_argument("--threshold-nonzero", type=float)
        p.add_argument("--workers", type=int, default=1, help="worker threads (does not change the report)")
        p.add_argument("--timing", action="store_true", help="embed wall-clock timings in the report")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--out", type=Path, help="write the report here instead of stdout")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    doc: dict = {}
    if args.config is not None:
        try:
            doc = json.loads(args.config.read_text())
        except OSError as exc:
            raise ConfigError("malformed_document", f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError("malformed_document", f"invalid JSON in {args.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("malformed_document", "config must be a JSON object")
    params = dict(args.param)
    if args.psi is not None:
        metric: dict | str = {"psi": args.psi, "params": params}
        if args.r_max is not None:
            metric["r_max"] = args.r_max
        doc["metric"] = metric
    elif args.metric is not None:
        if args.metric == "riemann_sqrt":
            metric = {"name": "riemann_sqrt", "k2": args.k2_fn, "k": args.k_fn, "params": params}
            if args.r_max is not None:
                metric["r_max"] = args.r_max
            doc["metric"] = metric
        else:
            doc["metric"] = args.metric
    if "metric" not in doc:
        raise ConfigError("unknown_metric", "give --metric, --psi or a config with 'metric'")
    for key in ("n", "samples", "seed", "k1", "c", "k_fn", "k2_fn", "tolerance_zero", "threshold_nonzero"):
        value = getattr(args, key)
        if value is not None:
            doc[key] = value
    if args.r_range is not None:
        doc["r_range"] = list(args.r_range)
    if args.timing:
        doc["include_timing"] = True
    doc["suites"] = [args.command]
    return config_from_dict(doc)


def _catalog() -> str:
    width = max(len(name) for name in CATALOG)
    return "".join(f"{name:<{width}}  {formula}\n" for name, (formula, _) in CATALOG.items())


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "catalog":
        sys.stdout.write(_catalog())
        return 0
    try:
        config = config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.workers < 1:
        print("config error [invalid_value]: --workers must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_suites(config, workers=args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FinslerError, ArithmeticError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    data = emit_report(report, args.format)
    if args.out is not None:
        args.out.write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    return exit_code(report)


if __name__ == "__main__":
    sys.exit(main())

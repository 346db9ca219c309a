"""Command line: ``qkdsuit analyze|simulate|sweep``.

Exit codes: 0 ok, 2 configuration error, 3 runtime error, 4 INSECURE verdict
with ``--fail-on-insecure``.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import FORMATS, load
from .errors import ConfigError, QKDSuitError
from .report import render, run_analyze, run_simulate, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_INSECURE = 0, 2, 3, 4

log = logging.getLogger("qkdsuit")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qkdsuit", description="Suitability-based QKD link security analysis.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("analyze", "closed-form suitability report"),
                        ("simulate", "seeded Monte Carlo run with analytic comparison"),
                        ("sweep", "analyze over a 1-D parameter grid")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override one key (repeatable, applied after --config)")
        p.add_argument("--output", help="write here instead of stdout")
        p.add_argument("--format", choices=FORMATS)
        p.add_argument("--fail-on-insecure", action="store_true")
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = [f"run.command={args.command}", *args.overrides]
    if args.output:
        overrides.append(f"output.path={args.output}")
    if args.format:
        overrides.append(f"output.format={args.format}")
    try:
        cfg = load(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if cfg.command == "analyze":
            outcome = run_analyze(cfg)
            insecure = outcome.verdict == "INSECURE"
        elif cfg.command == "simulate":
            outcome = run_simulate(cfg)
            log.info("simulated %d pulses in %.2f s", outcome[0].pulses, outcome[0].elapsed)
            insecure = run_analyze(cfg).verdict == "INSECURE"
        else:
            outcome = run_sweep(cfg)
            insecure = any(row["verdict"] == "INSECURE" for row in outcome)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QKDSuitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    text = render(cfg.command, cfg, cfg.output_format, outcome)
    if cfg.output_path:
        Path(cfg.output_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.fail_on_insecure and insecure:
        return EXIT_INSECURE
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())

"""Command line entry point.

align run <config>       simulate a scenario and compare the configured
                         alignment methods, writing traces/summary/manifest
align simulate <config>  write only the synthesized truth and sensor CSVs
align version            print the package version

Exit codes: 0 success, 1 bad configuration or usage, 2 alignment failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .errors import AlignmentError, ConfigError
from .runner import emit_outputs, load_config, run_comparison, build_scenario
from .sensors import write_gnss_csv, write_imu_csv

__all__ = ["main"]


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="align",
        description="In-motion initial alignment comparison harness.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate and run the configured methods")
    run.add_argument("config", help="INI run description")
    run.add_argument("--outdir", default=None, help="override output directory")
    run.add_argument("--seed", type=int, default=None, help="override RNG seed")

    sim = sub.add_parser("simulate", help="write truth and sensor streams only")
    sim.add_argument("config", help="INI run description")
    sim.add_argument("--outdir", default=None, help="override output directory")
    sim.add_argument("--seed", type=int, default=None, help="override RNG seed")

    sub.add_parser("version", help="print version")
    return ap


def _load(args):
    from dataclasses import replace

    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.outdir is not None:
        cfg = replace(cfg, outdir=args.outdir)
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "version":
        print(__version__)
        return 0
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "simulate":
            truth, spec, imu, gnss = build_scenario(cfg)
            os.makedirs(cfg.outdir, exist_ok=True)
            imu_path = os.path.join(cfg.outdir, "imu.csv")
            gnss_path = os.path.join(cfg.outdir, "gnss.csv")
            write_imu_csv(imu, imu_path)
            write_gnss_csv(gnss, gnss_path)
            print(f"wrote {imu_path} ({len(imu.time)} samples)")
            print(f"wrote {gnss_path} ({len(gnss.time)} fixes)")
            return 0

        result = run_comparison(cfg)
        paths = emit_outputs(result)
        for row in result["summaries"]:
            p, r, y = row.final_err_deg
            print(
                f"{row.method}: final err (pitch {p:+.4f}, roll {r:+.4f}, "
                f"yaw {y:+.4f}) deg, solved {row.n_solved}/{row.n_epochs}, "
                f"converged={'yes' if row.converged else 'no'}"
            )
        for method, msg in result["failures"].items():
            print(f"{method}: FAILED ({msg})", file=sys.stderr)
        for path in paths:
            print(f"wrote {path}")
        if result["failures"] and not result["runs"]:
            return 2
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except AlignmentError as exc:
        print(f"alignment error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command line: ``magstark <experiment> --config FILE [--out DIR]
[--emit json,csv,svg] [--threads N]``.  Exit status 0 only when every
verdict in the report passes."""
from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .experiments import EXPERIMENTS
from .report import emit_report

_HELP = {
    "volume": "trapped-set volume (quadrature and Monte Carlo)",
    "bottom": "lowest P^int levels against the harmonic prediction",
    "weyl": "P^int counts in [a, b] against the Weyl prediction",
    "gap": "gap between narrow resonances and the rest",
    "correspond": "resonance / P^int eigenvalue correspondence",
    "nontrap": "resonance-free rectangle and resolvent bound",
    "realtheta": "real-theta invariance under grid refinement",
    "stability": "resonance stability under changes of the distortion",
}


def build_parser():
    ap = argparse.ArgumentParser(prog="magstark", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--config", required=True, help="scenario TOML file")
        p.add_argument("--out", default=None, help="output directory (default from config)")
        p.add_argument("--emit", default=None,
                       help="comma-separated formats out of json,csv,svg")
        p.add_argument("--threads", type=int, default=1, help="worker threads")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
    except (OSError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = EXPERIMENTS[args.experiment](config, threads=args.threads)
    formats = args.emit.split(",") if args.emit else list(config.output.emit)
    out = args.out or config.output.dir
    try:
        paths = emit_report(report, out, [f.strip() for f in formats if f.strip()])
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for v in report.verdicts:
        print(f"{'PASS' if v.passed else 'FAIL'} {v.name}: {v.detail}")
    for n in report.notes:
        print(f"note: {n}")
    for p in paths:
        print(f"wrote {p}")
    return 0 if report.passed else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

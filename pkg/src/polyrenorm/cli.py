"""``polyrenorm <mode> --config <path> [--seed N] [--out <dir>]``.

Exit codes: 0 all checks pass, 1 a check or stage failed, 2 configuration
or output-path problems.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .pipeline import MODES, ConfigError, ExperimentConfig, run
from .report import emit_tables


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polyrenorm", description=__doc__.splitlines()[0])
    p.add_argument("mode", choices=MODES)
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--seed", type=int, default=None, help="override samples.seed")
    p.add_argument("--out", default=None, help="output directory (default: config 'output' or ./out)")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config, mode=args.mode, seed=args.seed, output=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    report = run(cfg)
    out = Path(cfg.output or "out")
    try:
        emit_tables(report, out)
    except OSError as exc:
        print(f"cannot write reports to {out}: {exc}", file=sys.stderr)
        return 2
    failed = [c for c in report.checks if not c.passed]
    for c in failed:
        print(f"FAIL {c.name}: margin={c.margin!r} {c.detail}".rstrip(), file=sys.stderr)
    print(f"{cfg.mode}: {len(report.checks) - len(failed)}/{len(report.checks)} checks passed; "
          f"report in {out}")
    return 0 if not failed else 1


if __name__ == "__main__":
    sys.exit(main())

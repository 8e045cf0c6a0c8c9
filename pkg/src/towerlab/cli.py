"""Command line runner.

    towerlab <kind> [--config FILE] [--seed N] [--out DIR] [--workers N]
    towerlab all-acceptance [--seed N] [--out DIR] [--workers N]

Kinds: return-tail, meeting-tail, approx-decay, clt, coboundary,
stationarity.  Parameters live in the config file; the flags override its
seed / output / worker values.  TOWERLAB_WORKERS overrides the default
worker count when --workers is absent.  Exit codes: 0 all checks passed,
2 a named check failed, 3 configuration error.
"""

from __future__ import annotations

import argparse
import sys

from .config import KINDS, ConfigError, default_config, load_config
from .experiments import run_all_acceptance, run_experiment
from .parallel import resolve_workers

EXIT_OK = 0
EXIT_CHECK_FAILED = 2
EXIT_CONFIG = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="towerlab",
        description="simulation experiments on heavy-tailed renewal towers")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS + ("all-acceptance",):
        p = sub.add_parser(kind)
        p.add_argument("--config", default=None, help="INI parameter file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--workers", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        workers = resolve_workers(args.workers)
        if args.kind == "all-acceptance":
            seed = args.seed if args.seed is not None else 20260809
            out = args.out if args.out is not None else "acceptance-out"
            code, _, _ = run_all_acceptance(out, seed, workers=workers)
            return code
        cfg = default_config(args.kind)
        if args.config:
            cfg = load_config(args.config, base=cfg)
            if cfg.kind != args.kind:
                raise ConfigError(
                    f"config file is for kind {cfg.kind!r}, not {args.kind!r}")
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out_dir = args.out
        result = run_experiment(cfg, workers=workers)
        for check in result.checks:
            print(check.line())
        if not result.passed:
            print(f"failed checks: {', '.join(result.failing())}",
                  file=sys.stderr)
            return EXIT_CHECK_FAILED
        return EXIT_OK
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

One subcommand per scenario plus ``suite`` to run them all; every
subcommand accepts::

    --config <path>   experiment INI (default: the packaged one)
    --out <dir>       output directory (default: ./flowlab_out/<scenario>)
    --format json|csv report format (default json)
    --threads <n>     caps BLAS thread pools; affects speed, never results
    --seed <u64>      overrides every named seed in the config
    --no-figures      skip PNG rendering

Exit codes: 0 all verdicts passed, 1 some verdict failed, 2 configuration
or runtime error.
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources

from .config import SCENARIO_NAMES, ExperimentConfig, load_config
from .errors import FlowLabError
from .reporting import emit_report
from .scenarios import run_scenario

__all__ = ["main", "default_config_text"]


def default_config_text(scenario: str) -> str:
    """The packaged default INI for a scenario."""
    ref = resources.files("flowlab.configs").joinpath(f"{scenario}.ini")
    return ref.read_text(encoding="utf-8")


def _limit_threads(n: int | None):
    if n is None:
        return None
    try:
        import threadpoolctl

        return threadpoolctl.threadpool_limits(limits=int(n))
    except ImportError:
        return None


def _load(scenario: str, args) -> tuple[ExperimentConfig, str]:
    if args.config:
        cfg = load_config(path=args.config, seed_override=args.seed)
        if cfg.scenario != scenario:
            raise FlowLabError(
                f"config names scenario {cfg.scenario!r} but the "
                f"{scenario!r} subcommand was invoked"
            )
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
        return cfg, text
    text = default_config_text(scenario)
    return load_config(text=text, seed_override=args.seed), text


def _run_one(scenario: str, args) -> int:
    cfg, text = _load(scenario, args)
    out_dir = args.out or f"flowlab_out/{scenario}"
    report = run_scenario(cfg)
    emit_report(
        report, out_dir, fmt=args.format, config_text=text, figures=not args.no_figures
    )
    for v in report.verdicts:
        mark = "pass" if v.passed else "FAIL"
        print(f"[{mark}] {scenario}/{v.name}: {v.metric} = {v.value:.6g} ({v.threshold})")
    return 0 if report.passed else 1


def _add_common(sub):
    sub.add_argument("--config", help="experiment INI path (default: packaged)")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--format", choices=("json", "csv"), default="json")
    sub.add_argument("--threads", type=int, default=None,
                     help="cap numeric thread pools (speed only)")
    sub.add_argument("--seed", type=int, default=None,
                     help="override every named seed")
    sub.add_argument("--no-figures", action="store_true",
                     help="skip PNG rendering of series")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowlab",
        description="Desk-scale experiments on flows of partially regular fields.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name in SCENARIO_NAMES:
        sub = subs.add_parser(name, help=f"run the {name} scenario")
        _add_common(sub)
    suite = subs.add_parser("suite", help="run every scenario with its default config")
    _add_common(suite)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    limiter = _limit_threads(args.threads)
    try:
        if args.command == "suite":
            worst = 0
            for name in SCENARIO_NAMES:
                sub_args = argparse.Namespace(
                    config=None,
                    out=f"{args.out or 'flowlab_out'}/{name}",
                    format=args.format,
                    seed=args.seed,
                    no_figures=args.no_figures,
                )
                worst = max(worst, _run_one(name, sub_args))
            return worst
        return _run_one(args.command, args)
    except FlowLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    finally:
        if limiter is not None:
            limiter.unregister()


if __name__ == "__main__":
    sys.exit(main())

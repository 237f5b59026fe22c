#!/usr/bin/env python3
"""
THz Semi-Blind Command Line
===========================

Subcommands:
    run <config>       Monte Carlo experiment, one CSV per metric
    validate <config>  check a scenario file and list every problem
    bound <config>     analytic ML MSE and C-CRLB curves (bound.csv)
    bench              wall-clock timing of estimators and combiner design

Exit codes: 0 success, 1 configuration error, 2 runtime error.

Usage:
    python src/harness/cli.py validate configs/quick.json
    python src/harness/cli.py run configs/gain_vs_nbs.json --threads 4 --out-dir results/gain
    python src/harness/cli.py bound configs/gain_vs_nbs.json
    python src/harness/cli.py bench --sizes 32x8,64x12 --repetitions 5
"""

import argparse
import logging
import os
import sys
from typing import List, Optional, Tuple

# Add the project root to the path so we can import from src/
project_root = os.path.join(os.path.dirname(__file__), '..', '..')
sys.path.insert(0, project_root)

from src.bounds.ccrlb import wd_sb_gain
from src.core.errors import ConfigError
from src.harness.bench import run_bench
from src.harness.config import (RuntimeSettings, ScenarioConfig, check_scenario,
                                configure_logging, load_scenario)
from src.harness.experiment import compute_bounds, run_experiment

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class ThzSbArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with the configuration-error code"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = ThzSbArgumentParser(prog="thzsb",
                                 description="THz semi-blind channel estimation experiments")
    parser.add_argument("--log-level", default=None, help="Logging level (default: THZSB_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ThzSbArgumentParser)

    for name, help_text in (("run", "Run a Monte Carlo experiment"),
                            ("validate", "Validate a scenario file"),
                            ("bound", "Write analytic bound curves")):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("config", help="Scenario JSON file")
        cmd.add_argument("--seed", type=int, default=None, help="Override the scenario seed")
        cmd.add_argument("--trials", type=int, default=None, help="Override the trial count")
        cmd.add_argument("--out-dir", default=None, help="Output directory for CSV files")
        cmd.add_argument("--threads", type=int, default=None,
                         help="Worker processes (default: THZSB_THREADS)")

    bench = sub.add_parser("bench", help="Time estimators and combiner design")
    bench.add_argument("--sizes", default="32x8,64x12,128x12", help="Comma-separated N_BSxK_U pairs")
    bench.add_argument("--repetitions", type=int, default=10, help="Timed calls per workload")
    bench.add_argument("--n-data", type=int, default=1000, help="Data block length")
    bench.add_argument("--seed", type=int, default=0, help="Problem-instance seed")
    bench.add_argument("--out-dir", default=None, help="Output directory for bench.csv")
    return parser


def parse_sizes(text: str) -> List[Tuple[int, int]]:
    sizes = []
    for item in text.split(","):
        try:
            n_bs, k_u = item.lower().split("x")
            sizes.append((int(n_bs), int(k_u)))
        except ValueError:
            raise ConfigError(f"bad size '{item}', expected N_BSxK_U such as 64x12")
    return sizes


def apply_overrides(cfg: ScenarioConfig, seed: Optional[int], trials: Optional[int]) -> ScenarioConfig:
    """Command-line overrides on top of the scenario file."""
    problems = []
    if seed is not None and not 0 <= seed < 2 ** 64:
        problems.append(f"--seed must be a 64-bit unsigned integer, got {seed}")
    if trials is not None and trials < 1:
        problems.append(f"--trials must be >= 1, got {trials}")
    if problems:
        raise ConfigError(f"{len(problems)} configuration problem(s)", problems)
    updates = {}
    if seed is not None:
        updates["seed"] = seed
    if trials is not None:
        updates["trials"] = trials
    return cfg.model_copy(update=updates) if updates else cfg


def _resolve_threads(threads: Optional[int], settings: RuntimeSettings) -> int:
    threads = threads if threads is not None else settings.THREADS
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    return threads


def _report_config_error(error: ConfigError):
    print(f"❌ Configuration error: {error}", file=sys.stderr)
    for problem in error.problems:
        print(f"   • {problem}", file=sys.stderr)


def _dispatch(args, settings: RuntimeSettings) -> int:
    if args.command == "bench":
        out_dir = args.out_dir or settings.OUT_DIR
        table = run_bench(parse_sizes(args.sizes), args.repetitions, args.seed, args.n_data, out_dir)
        print(table.to_string(index=False))
        print(f"✅ Benchmark written to {os.path.join(out_dir, 'bench.csv')}")
        return EXIT_OK

    cfg = apply_overrides(load_scenario(args.config), args.seed, args.trials)
    out_dir = args.out_dir or cfg.outputs

    if args.command == "validate":
        problems = check_scenario(cfg)
        if problems:
            raise ConfigError(f"{len(problems)} configuration problem(s)", problems)
        n_points = len(cfg.sweep.values)
        print(f"✅ {args.config} is valid: {n_points} sweep point(s) x {cfg.trials} trial(s)")
        return EXIT_OK

    if args.command == "bound":
        table = compute_bounds(cfg, out_dir)
        print(table.to_string(index=False))
        seen = set()
        for _, _, point in cfg.sweep_points():
            key = (point.system.n_bs, point.system.k_u)
            if key in seen:
                continue
            seen.add(key)
            print(f"WD-SB gain over ML: {wd_sb_gain(*key):.2f} dB (N_BS={key[0]}, K_U={key[1]})")
        return EXIT_OK

    threads = _resolve_threads(args.threads, settings)
    rows = run_experiment(cfg, threads=threads, out_dir=out_dir)
    print(f"✅ {len(rows)} metric rows written to {out_dir}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        settings = RuntimeSettings()
    except ValueError as e:
        print(f"❌ Bad environment setting: {e}", file=sys.stderr)
        return EXIT_CONFIG
    configure_logging(args.log_level or settings.LOG_LEVEL)

    try:
        return _dispatch(args, settings)
    except ConfigError as e:
        _report_config_error(e)
        return EXIT_CONFIG
    except Exception as e:
        logger.exception("run failed")
        print(f"❌ Error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

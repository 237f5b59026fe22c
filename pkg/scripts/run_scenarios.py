#!/usr/bin/env python3
"""
Run Bundled Scenarios
=====================

Runs every scenario under configs/ (or the ones named on the command line)
and writes each one's CSVs plus bound.csv to its outputs directory.

Usage:
    python scripts/run_scenarios.py                         # all scenarios
    python scripts/run_scenarios.py quick ml_mse_check      # selected ones
    python scripts/run_scenarios.py --threads 8 --trials 50
"""

import argparse
import glob
import logging
import os
import sys
import time

project_root = os.path.join(os.path.dirname(__file__), '..')
sys.path.insert(0, project_root)
from src.core.errors import ThzSbError
from src.harness.cli import apply_overrides
from src.harness.config import RuntimeSettings, configure_logging, load_scenario
from src.harness.experiment import compute_bounds, run_experiment

logger = logging.getLogger(__name__)

CONFIG_DIR = os.path.join(project_root, 'configs')


def main():
    parser = argparse.ArgumentParser(description="Run the bundled THz semi-blind scenarios")
    parser.add_argument("names", nargs="*", help="Scenario names (file stems under configs/)")
    parser.add_argument("--threads", type=int, default=None, help="Worker processes")
    parser.add_argument("--trials", type=int, default=None, help="Override every trial count")
    parser.add_argument("--seed", type=int, default=None, help="Override every seed")
    args = parser.parse_args()

    settings = RuntimeSettings()
    configure_logging(settings.LOG_LEVEL)
    threads = args.threads or settings.THREADS

    paths = sorted(glob.glob(os.path.join(CONFIG_DIR, '*.json')))
    if args.names:
        paths = [p for p in paths if os.path.splitext(os.path.basename(p))[0] in args.names]
    if not paths:
        print("❌ No matching scenarios found")
        sys.exit(1)

    failures = 0
    for path in paths:
        start = time.perf_counter()
        try:
            cfg = apply_overrides(load_scenario(path), args.seed, args.trials)
            rows = run_experiment(cfg, threads=threads, out_dir=cfg.outputs)
            compute_bounds(cfg, out_dir=cfg.outputs)
        except ThzSbError as e:
            failures += 1
            print(f"❌ {os.path.basename(path)}: {e}")
            continue
        print(f"✅ {cfg.name}: {len(rows)} rows in {time.perf_counter() - start:.1f}s -> {cfg.outputs}")

    print(f"\n📊 {len(paths) - failures}/{len(paths)} scenarios completed")
    sys.exit(1 if failures else 0)


if __name__ == "__main__":
    main()

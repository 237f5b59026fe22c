#!/usr/bin/env python3
"""
Wall-Clock Benchmarks
=====================

Times each estimator and the SBL hybrid-combiner design over a grid of
(N_BS, K_U) sizes and writes bench.csv (method, n_bs, k_u, mean_ms, p95_ms).

Usage:
    from src.harness.bench import run_bench

    table = run_bench(sizes=[(32, 8), (64, 12)], repetitions=20, out_dir="results/bench")
"""

import logging
import os
import time
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.channel.materials import AbsorptionTable
from src.channel.thz_channel import ChannelParams, generate_channel, normalize_channel
from src.combiner.hybrid import SblConfig, build_dictionary, mmse_digital, sbl_hybrid_combiner
from src.core.errors import ConfigError
from src.core.numerics import make_rng
from src.estimators.ml import estimate_ml
from src.estimators.rals_sb import RalsConfig, estimate_rals_sb, joint_frame
from src.estimators.wd_sb import WdSbConfig, estimate_wd_sb
from src.transceiver.frames import (make_data, make_pilots, make_rf_combiner, receive_data,
                                    receive_pilots)

logger = logging.getLogger(__name__)

DEFAULT_SIZES: List[Tuple[int, int]] = [(32, 8), (64, 12), (128, 12)]
BENCH_SNR_DB = 10.0


def _time_ms(fn: Callable[[], object], repetitions: int) -> Tuple[float, float]:
    samples = []
    for _ in range(repetitions):
        start = time.perf_counter()
        fn()
        samples.append((time.perf_counter() - start) * 1000)
    return float(np.mean(samples)), float(np.percentile(samples, 95))


def _workloads(n_bs: int, k_u: int, seed: int, n_data: int) -> Dict[str, Callable[[], object]]:
    """Closures over one fixed problem instance of the given size."""
    rng = make_rng(seed, n_bs, k_u)
    sigma2 = 10 ** (-BENCH_SNR_DB / 10)
    n_rf = max(k_u, n_bs // 4)
    while n_bs % n_rf:
        n_rf += 1

    h = normalize_channel(generate_channel(ChannelParams(n_bs=n_bs, k_u=k_u),
                                           AbsorptionTable(), rng)).h
    pilots = make_pilots(k_u, k_u)
    data = make_data(n_data, k_u, 1.0, rng)
    combiner = make_rf_combiner(n_bs, n_rf, 4, "unitary_validation", rng)
    frame_p = receive_pilots(h, pilots, combiner, sigma2, rng)
    frame_d = receive_data(h, data, combiner, sigma2, rng)
    y_joint = joint_frame(frame_p, frame_d)
    wd_cfg = WdSbConfig(n_data=n_data, sigma2=sigma2)
    rals_cfg = RalsConfig(max_iters=20)
    dictionary = build_dictionary(n_bs, 2 * n_bs)
    w_mmse = mmse_digital(h, k_u, sigma2)

    return {
        "ml": lambda: estimate_ml(frame_p, pilots, combiner),
        "rals_sb": lambda: estimate_rals_sb(y_joint, pilots, combiner, rals_cfg, rng),
        "wd_sb_estimated": lambda: estimate_wd_sb(frame_p, frame_d, pilots, combiner, wd_cfg),
        "sbl_combiner": lambda: sbl_hybrid_combiner(w_mmse, dictionary, n_rf, SblConfig(), sigma2),
    }


def run_bench(sizes: Optional[Sequence[Tuple[int, int]]] = None, repetitions: int = 10,
              seed: int = 0, n_data: int = 1000, out_dir: Optional[str] = None) -> pd.DataFrame:
    """Time every workload at every size.

    Args:
        sizes: (n_bs, k_u) pairs
        repetitions: timed calls per workload
        seed: problem-instance seed
        n_data: data block length for the semi-blind estimators
        out_dir: where to write bench.csv (None skips writing)

    Returns:
        DataFrame with columns method, n_bs, k_u, mean_ms, p95_ms
    """
    if repetitions < 1:
        raise ConfigError(f"repetitions must be >= 1, got {repetitions}")
    sizes = list(sizes or DEFAULT_SIZES)
    bad = [f"(n_bs={n}, k_u={k})" for n, k in sizes if not 1 <= k <= n]
    if bad:
        raise ConfigError(f"invalid benchmark sizes: {', '.join(bad)}", bad)

    records = []
    for n_bs, k_u in sizes:
        for method, fn in _workloads(n_bs, k_u, seed, n_data).items():
            mean_ms, p95_ms = _time_ms(fn, repetitions)
            logger.info(f"{method:>16} N_BS={n_bs:<4} K_U={k_u:<3} {mean_ms:8.2f} ms")
            records.append({"method": method, "n_bs": n_bs, "k_u": k_u,
                            "mean_ms": mean_ms, "p95_ms": p95_ms})

    table = pd.DataFrame(records, columns=["method", "n_bs", "k_u", "mean_ms", "p95_ms"])
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, "bench.csv")
        table.to_csv(path, index=False)
        logger.info(f"✅ Wrote {path}")
    return table

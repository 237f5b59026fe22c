#!/usr/bin/env python3
"""
Monte Carlo Experiment Runner
=============================

Runs every (sweep point, trial) pair of a ScenarioConfig as an independent
work unit with its own random stream, then reduces the per-trial metrics
in a fixed order. Serial and parallel runs therefore produce identical
numbers.

Key Features:
- Channel, frames and optional ADC quantization per trial
- ML, RALS-SB and WD-SB (perfect / estimated whitening) estimators
- NMSE, BER, spectral efficiency and error ECDF metrics
- One CSV per metric

Usage:
    from src.harness.config import load_scenario
    from src.harness.experiment import run_experiment

    rows = run_experiment(load_scenario("configs/gain_vs_nbs.json"), threads=4,
                          out_dir="results/gain")
"""

import logging
import os
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.bounds.ccrlb import (CrlbInputs, ccrlb, ml_mse, mse_to_nmse_db, wd_sb_gain)
from src.channel.materials import AbsorptionTable
from src.channel.thz_channel import generate_channel, normalize_channel
from src.combiner.hybrid import (build_dictionary, digital_pair, mmse_digital,
                                 sbl_hybrid_combiner, spectral_efficiency)
from src.core.errors import ConfigError
from src.core.numerics import make_rng
from src.estimators.base import ChannelEstimate, back_project
from src.estimators.ml import estimate_ml
from src.estimators.rals_sb import estimate_rals_sb, joint_frame
from src.estimators.wd_sb import WdSbConfig, estimate_wd_sb
from src.harness.config import ScenarioConfig, check_scenario
from src.harness.metrics import (MetricRow, ber_qpsk, ecdf, nmse, nmse_db_summary,
                                 summarize)
from src.transceiver.adc import quantize_frame
from src.transceiver.frames import (make_data, make_pilots, make_rf_combiner, receive_data,
                                    receive_pilots)

logger = logging.getLogger(__name__)

PERFECT_CSI = "perfect_csi"


@dataclass
class TrialResult:
    """Per-trial metric values keyed by method"""
    sweep_index: int
    trial_index: int
    nmse: Dict[str, float] = field(default_factory=OrderedDict)
    ber: Dict[str, float] = field(default_factory=OrderedDict)
    se: Dict[str, float] = field(default_factory=OrderedDict)
    errors: Dict[str, np.ndarray] = field(default_factory=OrderedDict)


@lru_cache(maxsize=8)
def _absorption_table(path: Optional[str]) -> AbsorptionTable:
    if not path:
        return AbsorptionTable()
    return AbsorptionTable.from_csv(path)


def _detect(frame_d, combiner, h_hat, k_u, sigma2, pseudo_inverse) -> np.ndarray:
    """Soft data estimates from MMSE combining of the back-projected data block."""
    z_d = back_project(frame_d, combiner, pseudo_inverse)
    w = mmse_digital(h_hat, k_u, sigma2)
    return (w.conj().T @ z_d).conj().T


def run_trial(cfg: ScenarioConfig, sweep_index: int, trial_index: int) -> TrialResult:
    """One Monte Carlo trial at one sweep point."""
    point = cfg.point(cfg.sweep.values[sweep_index])
    s = point.system
    sigma2 = point.sigma2
    rng = make_rng(cfg.seed, sweep_index, trial_index)

    params = cfg.channel.to_params(s.n_bs, s.k_u, point.f_hz, point.distance_m)
    channel = generate_channel(params, _absorption_table(cfg.channel.absorption_file), rng)
    if cfg.channel.normalize_h:
        channel = normalize_channel(channel)
    h = channel.h

    pilots = make_pilots(s.tau_p, s.k_u, s.p_p)
    data = make_data(s.n_data, s.k_u, s.p_d, rng)
    combiner = make_rf_combiner(s.n_bs, s.n_rf, s.n_q, s.combiner_mode, rng)
    frame_p = quantize_frame(receive_pilots(h, pilots, combiner, sigma2, rng),
                             s.adc_bits, cfg.clip_scale)
    frame_d = quantize_frame(receive_data(h, data, combiner, sigma2, rng),
                             s.adc_bits, cfg.clip_scale)

    estimates: Dict[str, ChannelEstimate] = OrderedDict()
    for name in cfg.estimators:
        if name == "ml":
            estimates[name] = estimate_ml(frame_p, pilots, combiner, s.pseudo_inverse_combining)
        elif name == "rals_sb":
            estimates[name], _ = estimate_rals_sb(joint_frame(frame_p, frame_d), pilots,
                                                  combiner, cfg.rals, rng)
        else:
            wd_cfg = WdSbConfig(
                n_data=s.n_data,
                sigma2=sigma2,
                p_d=s.p_d,
                whitening="perfect" if name == "wd_sb_perfect" else "estimated",
                pseudo_inverse_combining=s.pseudo_inverse_combining,
            )
            estimates[name] = estimate_wd_sb(frame_p, frame_d, pilots, combiner, wd_cfg, true_h=h)

    result = TrialResult(sweep_index, trial_index)
    for name, estimate in estimates.items():
        if "nmse" in cfg.metrics:
            result.nmse[name] = nmse(estimate.h_hat, h)
        if "ecdf" in cfg.metrics:
            result.errors[name] = np.abs(estimate.h_hat - h).ravel()
        if "ber" in cfg.metrics:
            # same MMSE detector for every method
            soft = _detect(frame_d, combiner, estimate.h_hat, s.k_u, sigma2,
                           s.pseudo_inverse_combining)
            result.ber[name] = ber_qpsk(soft, data)

    if "se" in cfg.metrics:
        dictionary = build_dictionary(s.n_bs, cfg.sbl.s or 2 * s.n_bs, cfg.channel.d_r_over_lambda)
        csi = [(PERFECT_CSI, h)] + [(name, e.h_hat) for name, e in estimates.items()]
        for name, h_hat in csi:
            w_mmse = mmse_digital(h_hat, s.k_u, sigma2)
            pair = sbl_hybrid_combiner(w_mmse, dictionary, s.n_rf, cfg.sbl, sigma_v2=sigma2)
            digital = digital_pair(w_mmse)
            result.se[f"{name}+digital"] = spectral_efficiency(h, digital.w_rf, digital.w_bb, sigma2, s.k_u)
            result.se[f"{name}+hybrid"] = spectral_efficiency(h, pair.w_rf, pair.w_bb, sigma2, s.k_u)
    return result


def _run_task(task: Tuple[ScenarioConfig, int, int]) -> TrialResult:
    return run_trial(*task)


def _sweep_value(value) -> float:
    return float(value) if not isinstance(value, str) else float(value.strip())


def aggregate(cfg: ScenarioConfig, results: List[TrialResult]) -> List[MetricRow]:
    """Ordered reduction of trial results into metric rows."""
    rows: List[MetricRow] = []
    by_point: Dict[int, List[TrialResult]] = OrderedDict()
    for r in sorted(results, key=lambda r: (r.sweep_index, r.trial_index)):
        by_point.setdefault(r.sweep_index, []).append(r)

    for index, trials in by_point.items():
        value = _sweep_value(cfg.sweep.values[index])
        n = len(trials)
        for method in trials[0].nmse:
            mean_db, stderr_db = nmse_db_summary([t.nmse[method] for t in trials])
            rows.append(MetricRow(sweep_value=value, method=method, metric="nmse_db",
                                  mean=mean_db, stderr=stderr_db, trials=n))
        for metric, attribute in (("ber", "ber"), ("se_bps_hz", "se")):
            for method in getattr(trials[0], attribute):
                mean, stderr = summarize([getattr(t, attribute)[method] for t in trials])
                rows.append(MetricRow(sweep_value=value, method=method, metric=metric,
                                      mean=mean, stderr=stderr, trials=n))
        for method in trials[0].errors:
            pooled = np.concatenate([t.errors[method] for t in trials])
            for threshold, fraction in ecdf(pooled, cfg.ecdf_thresholds):
                rows.append(MetricRow(sweep_value=value, method=method, metric="ecdf",
                                      mean=fraction, stderr=0.0, trials=n, threshold=threshold))
    return rows


def write_csvs(rows: List[MetricRow], out_dir: str) -> List[str]:
    """One CSV per metric family; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    frame = pd.DataFrame([r.model_dump() for r in rows])
    written = []
    if frame.empty:
        return written

    layouts = {
        "nmse_db": ("nmse.csv", {"mean": "mean_db", "stderr": "stderr_db"},
                    ["sweep_value", "method", "mean_db", "stderr_db", "trials"]),
        "ber": ("ber.csv", {}, ["sweep_value", "method", "mean", "stderr", "trials"]),
        "se_bps_hz": ("se.csv", {}, ["sweep_value", "method", "mean", "stderr", "trials"]),
        "ecdf": ("ecdf.csv", {"mean": "fraction"}, ["threshold", "method", "fraction", "sweep_value"]),
    }
    for metric, (filename, renames, columns) in layouts.items():
        subset = frame[frame["metric"] == metric]
        if subset.empty:
            continue
        path = os.path.join(out_dir, filename)
        subset.rename(columns=renames)[columns].to_csv(path, index=False)
        written.append(path)
    return written


def run_experiment(cfg: ScenarioConfig, threads: int = 1,
                   out_dir: Optional[str] = None) -> List[MetricRow]:
    """Run a full scenario.

    Args:
        cfg: validated scenario
        threads: worker processes (1 runs inline)
        out_dir: where to write CSVs (None skips writing)

    Returns:
        Aggregated MetricRows, ordered by sweep point then method
    """
    problems = check_scenario(cfg)
    if problems:
        raise ConfigError(f"{len(problems)} configuration problem(s)", problems)

    tasks = [(cfg, i, t) for i in range(len(cfg.sweep.values)) for t in range(cfg.trials)]
    logger.info(f"Running '{cfg.name}': {len(cfg.sweep.values)} sweep points x "
                f"{cfg.trials} trials on {threads} worker(s)")

    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * threads))))
    else:
        results = [_run_task(task) for task in tasks]

    rows = aggregate(cfg, results)
    if out_dir:
        for path in write_csvs(rows, out_dir):
            logger.info(f"✅ Wrote {path}")
    return rows


def compute_bounds(cfg: ScenarioConfig, out_dir: Optional[str] = None) -> pd.DataFrame:
    """Analytic ML MSE and C-CRLB curves for each sweep point, no Monte Carlo.

    The C-CRLB is evaluated on one channel draw per sweep point; its total
    does not depend on the draw.
    """
    problems = check_scenario(cfg)
    if problems:
        raise ConfigError(f"{len(problems)} configuration problem(s)", problems)

    records = []
    for index, value, point in cfg.sweep_points():
        s = point.system
        rng = make_rng(cfg.seed, index, 0)
        params = cfg.channel.to_params(s.n_bs, s.k_u, point.f_hz, point.distance_m)
        channel = generate_channel(params, _absorption_table(cfg.channel.absorption_file), rng)
        if cfg.channel.normalize_h:
            channel = normalize_channel(channel)
        power = float(np.linalg.norm(channel.h) ** 2)

        bound = ccrlb(CrlbInputs.from_channel(channel.h, s.p_p, s.tau_p, point.sigma2), full=False)
        ml = ml_mse(point.sigma2, s.k_u, s.n_bs, s.p_p, s.tau_p)
        records.append({
            "sweep_value": _sweep_value(value),
            "ml_mse": ml,
            "ccrlb_mse": bound.total_mse_bound,
            "ml_nmse_db": mse_to_nmse_db(ml, power),
            "ccrlb_nmse_db": mse_to_nmse_db(bound.total_mse_bound, power),
            "gain_db": wd_sb_gain(s.n_bs, s.k_u),
        })

    frame = pd.DataFrame(records)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, "bound.csv")
        frame.to_csv(path, index=False)
        logger.info(f"✅ Wrote {path}")
    return frame

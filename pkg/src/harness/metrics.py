#!/usr/bin/env python3
"""
Performance Metrics and Aggregation
===================================

Per-trial metrics (NMSE, QPSK bit error rate, empirical CDF of estimation
errors) and the mean/standard-error reduction across trials.

Usage:
    from src.harness.metrics import nmse, ber_qpsk, ecdf, summarize

    value = nmse(estimate.h_hat, channel.h)
    mean, stderr = summarize([0.1, 0.12, 0.09])
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from src.core.errors import ContractViolation, UndefinedMetricError
from src.transceiver.frames import DataBlock, qpsk_demodulate

# below double-precision resolution of any NMSE we can measure
NMSE_DB_FLOOR = -300.0


class MetricRow(BaseModel):
    """One aggregated point of one curve"""
    sweep_value: float
    method: str
    metric: str
    mean: float = Field(..., allow_inf_nan=False)
    stderr: float = Field(..., ge=0)
    trials: int
    threshold: Optional[float] = None


def nmse(h_hat, h) -> float:
    """‖Ĥ − H‖²_F / ‖H‖²_F (linear)."""
    h_hat, h = np.asarray(h_hat), np.asarray(h)
    if h_hat.shape != h.shape:
        raise ContractViolation(f"shape mismatch {h_hat.shape} vs {h.shape}")
    reference = float(np.linalg.norm(h) ** 2)
    if reference == 0:
        raise UndefinedMetricError("NMSE is undefined for an all-zero channel")
    return float(np.linalg.norm(h_hat - h) ** 2) / reference


def to_db(value: float) -> float:
    return 10 * math.log10(value) if value > 0 else -math.inf


def ber_qpsk(x_hat_soft, x_true: DataBlock) -> float:
    """Bit error fraction of hard Gray-QPSK decisions on x_hat_soft."""
    x_hat_soft = np.asarray(x_hat_soft)
    if x_hat_soft.shape != x_true.x_d.shape:
        raise ContractViolation(f"shape mismatch {x_hat_soft.shape} vs {x_true.x_d.shape}")
    decided = qpsk_demodulate(x_hat_soft)
    return float(np.mean(decided != x_true.bits))


def ecdf(errors: Sequence[float], thresholds: Sequence[float]) -> List[Tuple[float, float]]:
    """Fraction of errors at or below each threshold."""
    values = np.sort(np.asarray(errors, dtype=float).ravel())
    if values.size == 0:
        raise ContractViolation("ECDF needs at least one error value")
    counts = np.searchsorted(values, np.asarray(thresholds, dtype=float), side='right')
    return [(float(t), float(c) / values.size) for t, c in zip(thresholds, counts)]


def summarize(values: Sequence[float]) -> Tuple[float, float]:
    """Batch mean and standard error of the mean."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ContractViolation("cannot summarize an empty sample")
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


class RunningStats:
    """Welford streaming mean/variance"""

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self._m2 = 0.0

    def push(self, value: float):
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (value - self.mean)

    @property
    def stderr(self) -> float:
        if self.count < 2:
            return 0.0
        return math.sqrt(self._m2 / (self.count - 1) / self.count)


def nmse_db_summary(values: Sequence[float]) -> Tuple[float, float]:
    """Mean NMSE in dB with the delta-method standard error.

    Exact estimates (mean NMSE of zero) report NMSE_DB_FLOOR so every
    aggregated row stays finite.
    """
    mean, stderr = summarize(values)
    if mean <= 0 or to_db(mean) < NMSE_DB_FLOOR:
        return NMSE_DB_FLOOR, 0.0
    return to_db(mean), 10 / math.log(10) * stderr / mean

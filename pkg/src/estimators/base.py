#!/usr/bin/env python3
"""
Shared Estimator Types
======================

ChannelEstimate is what every estimator returns; back_project undoes the
analog combiner before digital processing.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List

import numpy as np

from src.core.errors import ContractViolation
from src.core.numerics import pinv
from src.transceiver.frames import PilotBlock, ReceivedFrame, RfCombiner


class Method(str, Enum):
    ML = "ml"
    RALS_SB = "rals_sb"
    WD_SB = "wd_sb"


@dataclass
class ChannelEstimate:
    """Estimated channel with convergence diagnostics"""
    h_hat: np.ndarray
    method: Method
    iterations: int = 0
    converged: bool = True
    objective_trace: List[float] = field(default_factory=list)
    elapsed: float = 0.0
    warnings: List[str] = field(default_factory=list)

    def __post_init__(self):
        if not np.all(np.isfinite(self.h_hat)):
            raise ContractViolation(f"{self.method.value} produced a non-finite estimate")


def back_project(frame: ReceivedFrame, combiner: RfCombiner,
                 pseudo_inverse: bool = False) -> np.ndarray:
    """Map combiner outputs back to antenna space.

    W_RF Y by default; (W_RFᴴ)† Y when ``pseudo_inverse`` is set, which
    removes the combiner exactly whenever W_RF has full row rank.
    """
    if frame.y.shape[0] != combiner.n_outputs:
        raise ContractViolation(
            f"frame has {frame.y.shape[0]} rows but the combiner has {combiner.n_outputs} outputs"
        )
    if pseudo_inverse:
        return pinv(combiner.w_rf.conj().T) @ frame.y
    return combiner.w_rf @ frame.y


def check_pilots(frame: ReceivedFrame, pilots: PilotBlock):
    if frame.y.shape[1] != pilots.tau_p:
        raise ContractViolation(
            f"pilot frame has {frame.y.shape[1]} columns, expected tau_p={pilots.tau_p}"
        )

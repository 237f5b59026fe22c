#!/usr/bin/env python3
"""
Training-Based ML Channel Estimator
===================================

Ĥ = W_RF Y_p (X_pᴴ)†

With orthogonal pilots (X_pᴴ)† = X_p/(P_p τ_p), so the estimate is exact for
a unitary combiner and noiseless pilots, and its MSE is σ²K_U N_BS/(P_p τ_p).
"""

import logging
import time

from src.core.numerics import pinv
from src.estimators.base import ChannelEstimate, Method, back_project, check_pilots
from src.transceiver.frames import PilotBlock, ReceivedFrame, RfCombiner

logger = logging.getLogger(__name__)


def estimate_ml(frame: ReceivedFrame, pilots: PilotBlock, combiner: RfCombiner,
                pseudo_inverse_combining: bool = False) -> ChannelEstimate:
    """Least-squares/ML estimate from the pilot block alone.

    Args:
        frame: received pilot block Y_p
        pilots: transmitted pilots X_p
        combiner: stacked analog combiner used for Y_p
        pseudo_inverse_combining: back-project with (W_RFᴴ)† instead of W_RF

    Returns:
        ChannelEstimate tagged Method.ML
    """
    start = time.perf_counter()
    check_pilots(frame, pilots)
    z = back_project(frame, combiner, pseudo_inverse_combining)
    h_hat = z @ pinv(pilots.x_p.conj().T)
    return ChannelEstimate(h_hat=h_hat, method=Method.ML, elapsed=time.perf_counter() - start)

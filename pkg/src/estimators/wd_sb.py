#!/usr/bin/env python3
"""
Whitening-Decorrelation Semi-Blind Estimator
============================================

Splits the channel as H = W Tᴴ with W Wᴴ = H Hᴴ and T unitary:

1. W is learned blindly from the data block covariance
       M = (W_RF Y_d Y_dᴴ W_RFᴴ − Nσ²I)/(N P_d) ≈ H Hᴴ
   keeping its K_U leading eigenpairs: Ŵ = Û Σ̂^{1/2}.
2. T is the unitary Procrustes fit to the pilots: with
       C = Ŵᴴ W_RF Y_p X_p = U_SB S V_SBᴴ,   T̂ = V_SB U_SBᴴ.
3. Ĥ = Ŵ T̂ᴴ.

Only the K_U² real parameters of T are left to the pilots, which is where
the gain over training-only estimation comes from.

Usage:
    from src.estimators.wd_sb import WdSbConfig, estimate_wd_sb

    cfg = WdSbConfig(n_data=1000, sigma2=0.1, p_d=1.0, whitening="estimated")
    estimate = estimate_wd_sb(frame_p, frame_d, pilots, combiner, cfg)
"""

import logging
import time
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.core.errors import ContractViolation
from src.core.numerics import as_matrix, hermitian_eig, svd
from src.estimators.base import ChannelEstimate, Method, back_project, check_pilots
from src.transceiver.frames import PilotBlock, ReceivedFrame, RfCombiner

logger = logging.getLogger(__name__)


class WdSbConfig(BaseModel):
    """Known noise/data statistics and the whitening mode"""
    model_config = ConfigDict(frozen=True)

    n_data: int = Field(1000, ge=0)
    sigma2: float = Field(..., ge=0)
    p_d: float = Field(1.0, gt=0)
    whitening: Literal["perfect", "estimated"] = "estimated"
    pseudo_inverse_combining: bool = False

    @model_validator(mode='after')
    def _data_needed(self):
        if self.whitening == "estimated" and self.n_data < 1:
            raise ValueError("estimated whitening needs n_data >= 1")
        return self


def estimate_whitening(z_d: np.ndarray, k_u: int, sigma2: float,
                       p_d: float) -> Tuple[np.ndarray, int]:
    """Blind whitening matrix from back-projected data Z_d = W_RF Y_d.

    Returns:
        (Ŵ of shape N_BS x K_U, number of positive eigenvalues kept)
    """
    n_bs, n = z_d.shape
    r_y = z_d @ z_d.conj().T
    shifted = (r_y - n * sigma2 * np.eye(n_bs)) / (n * p_d)
    eigenvalues, eigenvectors = hermitian_eig(shifted)
    top = np.clip(eigenvalues[:k_u], 0.0, None)
    w_hat = eigenvectors[:, :k_u] * np.sqrt(top)
    return w_hat, int(np.count_nonzero(top > 0))


def perfect_whitening(h: np.ndarray) -> np.ndarray:
    """W = SΣ from the SVD of the true channel."""
    result = svd(h)
    return result.u * result.s


def procrustes_unitary(w_hat: np.ndarray, z_p: np.ndarray, x_p: np.ndarray) -> np.ndarray:
    """Unitary T̂ = V_SB U_SBᴴ from the SVD of Ŵᴴ Z_p X_p."""
    cross = w_hat.conj().T @ z_p @ x_p
    result = svd(cross)
    return result.vh.conj().T @ result.u.conj().T


def estimate_wd_sb(frame_p: ReceivedFrame, frame_d: Optional[ReceivedFrame],
                   pilots: PilotBlock, combiner: RfCombiner, cfg: WdSbConfig,
                   true_h: Optional[np.ndarray] = None) -> ChannelEstimate:
    """Semi-blind estimate: blind whitening plus pilot-based Procrustes rotation.

    Args:
        frame_p: received pilot block
        frame_d: received data block (may be None with perfect whitening)
        pilots: transmitted pilots
        combiner: analog combiner shared by both blocks
        cfg: noise variance, data power and whitening mode
        true_h: true channel, required for perfect whitening

    Returns:
        ChannelEstimate tagged Method.WD_SB; a rank-deficient whitening
        estimate is reported in ``warnings``
    """
    start = time.perf_counter()
    check_pilots(frame_p, pilots)
    k_u = pilots.k_u
    warnings = []

    if cfg.whitening == "perfect":
        if true_h is None:
            raise ContractViolation("perfect whitening needs the true channel")
        w_hat = perfect_whitening(as_matrix(true_h, "true channel"))
    else:
        if frame_d is None:
            raise ContractViolation("estimated whitening needs a data block")
        z_d = back_project(frame_d, combiner, cfg.pseudo_inverse_combining)
        w_hat, rank = estimate_whitening(z_d, k_u, cfg.sigma2, cfg.p_d)
        if rank < k_u:
            message = f"whitening estimate has rank {rank} < K_U={k_u}; missing directions zeroed"
            logger.warning(message)
            warnings.append(message)

    z_p = back_project(frame_p, combiner, cfg.pseudo_inverse_combining)
    t_hat = procrustes_unitary(w_hat, z_p, pilots.x_p)
    h_hat = w_hat @ t_hat.conj().T

    return ChannelEstimate(
        h_hat=h_hat,
        method=Method.WD_SB,
        elapsed=time.perf_counter() - start,
        warnings=warnings,
    )

#!/usr/bin/env python3
"""
Regularized ALS Semi-Blind Estimator
====================================

Fits the joint pilot+data block with a rank-K_U factorization

    Y ≈ W_RFᴴ U Λ V,   U: N_BS x K_U,   V: K_U x (τ_p + N)

by minimizing ‖Y − W_RFᴴUΛV‖² + β_U‖U‖² + β_V‖V‖² one factor at a time.
Both half-steps are exact minimizers, so the objective never increases.
The K_U x K_U ambiguity left by the factorization is removed with the pilot
columns of V:

    Γ = V_p X_p/(P_p τ_p),   Ĥ = U Λ Γ,   X̂_d = (Γ⁻¹ V_d)ᴴ

Usage:
    from src.estimators.rals_sb import RalsConfig, estimate_rals_sb, joint_frame

    y_joint = joint_frame(frame_p, frame_d)
    estimate, x_d_hat = estimate_rals_sb(y_joint, pilots, combiner, RalsConfig(), rng)
"""

import logging
import time
from dataclasses import replace
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.core.errors import AmbiguityResolutionError, ConfigError, ContractViolation
from src.core.numerics import complex_gaussian, hermitian_eig, solve_hpd
from src.estimators.base import ChannelEstimate, Method
from src.transceiver.frames import PilotBlock, ReceivedFrame, RfCombiner

logger = logging.getLogger(__name__)

MAX_AMBIGUITY_CONDITION = 1e12


class RalsConfig(BaseModel):
    """Regularization and stopping rule; None betas default to the noise variance"""
    model_config = ConfigDict(frozen=True)

    beta_u: Optional[float] = Field(None, gt=0)
    beta_v: Optional[float] = Field(None, gt=0)
    lambda_fading: Optional[List[float]] = None
    max_iters: int = Field(100, ge=1)
    rel_tol: float = Field(1e-6, gt=0)

    @field_validator('lambda_fading')
    @classmethod
    def _positive_fading(cls, v):
        if v is not None and any(x <= 0 for x in v):
            raise ValueError("lambda_fading entries must be positive")
        return v


def joint_frame(frame_p: ReceivedFrame, frame_d: ReceivedFrame) -> ReceivedFrame:
    """Concatenate pilot and data blocks column-wise: [Y_p, Y_d]."""
    if frame_p.y.shape[0] != frame_d.y.shape[0]:
        raise ContractViolation("pilot and data blocks come from different combiners")
    return replace(frame_p, y=np.hstack([frame_p.y, frame_d.y]))


def _objective(y, a, u, lam, v, beta_u, beta_v) -> float:
    residual = y - a @ (u * lam) @ v
    return float(np.linalg.norm(residual) ** 2
                 + beta_u * np.linalg.norm(u) ** 2
                 + beta_v * np.linalg.norm(v) ** 2)


class RalsSolver:
    """Alternating exact updates for one joint block"""

    def __init__(self, y: np.ndarray, w_rf: np.ndarray, lam: np.ndarray,
                 beta_u: float, beta_v: float):
        self.y = y
        self.a = w_rf.conj().T
        self.lam = lam
        self.beta_u = beta_u
        self.beta_v = beta_v
        # W_RF W_RFᴴ is fixed across iterations
        self.d, self.q = hermitian_eig(w_rf @ self.a)
        self.d = np.clip(self.d, 0.0, None)
        self.back = w_rf @ y

    def update_u(self, v: np.ndarray) -> np.ndarray:
        """argmin_U ‖Y − AUB‖² + β_U‖U‖² with B = ΛV (Sylvester-type, diagonalized)."""
        b = self.lam[:, None] * v
        e, p = hermitian_eig(b @ b.conj().T)
        e = np.clip(e, 0.0, None)
        rhs = self.q.conj().T @ self.back @ b.conj().T @ p
        u_tilde = rhs / (np.outer(self.d, e) + self.beta_u)
        return self.q @ u_tilde @ p.conj().T

    def update_v(self, u: np.ndarray) -> np.ndarray:
        """argmin_V ‖Y − GV‖² + β_V‖V‖² with G = AUΛ, all columns at once."""
        g = self.a @ (u * self.lam)
        gram = g.conj().T @ g + self.beta_v * np.eye(g.shape[1])
        return solve_hpd(gram, g.conj().T @ self.y)

    def objective(self, u, v) -> float:
        return _objective(self.y, self.a, u, self.lam, v, self.beta_u, self.beta_v)


def estimate_rals_sb(y_joint: ReceivedFrame, pilots: PilotBlock, combiner: RfCombiner,
                     cfg: RalsConfig, rng: np.random.Generator
                     ) -> Tuple[ChannelEstimate, np.ndarray]:
    """Semi-blind estimate from the joint pilot+data block.

    Args:
        y_joint: [Y_p, Y_d] as produced by joint_frame
        pilots: pilot block occupying the first τ_p columns
        combiner: analog combiner that produced y_joint
        cfg: regularization and stopping rule
        rng: generator for the random initial factors

    Returns:
        (ChannelEstimate tagged Method.RALS_SB, X̂_d of shape N x K_U)
    """
    start = time.perf_counter()
    y = y_joint.y
    k_u, tau_p = pilots.k_u, pilots.tau_p
    if y.shape[0] != combiner.n_outputs:
        raise ContractViolation(f"y_joint has {y.shape[0]} rows, combiner has {combiner.n_outputs}")
    if y.shape[1] <= tau_p:
        raise ContractViolation("y_joint must contain data columns after the pilots")

    beta_u = cfg.beta_u if cfg.beta_u is not None else y_joint.sigma_v2
    beta_v = cfg.beta_v if cfg.beta_v is not None else y_joint.sigma_v2
    if beta_u <= 0 or beta_v <= 0:
        raise ConfigError("RALS regularization must be positive; set beta_u/beta_v "
                          "explicitly for noiseless blocks")
    lam = np.ones(k_u) if cfg.lambda_fading is None else np.asarray(cfg.lambda_fading, float)
    if lam.shape != (k_u,):
        raise ConfigError(f"lambda_fading needs {k_u} entries, got {lam.size}")

    solver = RalsSolver(y, combiner.w_rf, lam, beta_u, beta_v)
    n_bs, tau_c = combiner.n_bs, y.shape[1]
    u = complex_gaussian(rng, n_bs, k_u, 1.0)
    v = complex_gaussian(rng, k_u, tau_c, 1.0)
    v[:, :tau_p] = pilots.x_p.conj().T

    trace: List[float] = []
    previous = solver.objective(u, v)
    converged = False
    iteration = 0
    for iteration in range(1, cfg.max_iters + 1):
        u = solver.update_u(v)
        trace.append(solver.objective(u, v))
        v = solver.update_v(u)
        current = solver.objective(u, v)
        trace.append(current)
        if abs(previous - current) <= cfg.rel_tol * max(previous, np.finfo(float).tiny):
            converged = True
            break
        previous = current

    if not converged:
        logger.warning(f"RALS did not converge in {cfg.max_iters} iterations")
    logger.debug(f"RALS stopped after {iteration} iterations, objective {trace[-1]:.4e}")

    gamma = v[:, :tau_p] @ pilots.x_p / (pilots.p_p * tau_p)
    condition = float(np.linalg.cond(gamma))
    if not np.isfinite(condition) or condition > MAX_AMBIGUITY_CONDITION:
        raise AmbiguityResolutionError(condition)

    h_hat = (u * lam) @ gamma
    x_d_hat = scipy.linalg.solve(gamma, v[:, tau_p:]).conj().T

    estimate = ChannelEstimate(
        h_hat=h_hat,
        method=Method.RALS_SB,
        iterations=iteration,
        converged=converged,
        objective_trace=trace,
        elapsed=time.perf_counter() - start,
    )
    return estimate, x_d_hat

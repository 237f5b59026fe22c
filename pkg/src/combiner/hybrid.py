#!/usr/bin/env python3
"""
Hybrid Receive Combiner Design
==============================

Turns a channel estimate into receive combiners:

- mmse_digital: the fully digital MMSE benchmark W = Ĥ(ĤᴴĤ + K_Uσ²I)⁻¹
- sbl_hybrid_combiner: approximates W by W_RF W_BB where the columns of
  W_RF are atoms of an angular dictionary. Row-sparsity of the dictionary
  weights is learned with sparse Bayesian learning (EM over per-atom
  variances γ); the N_RF atoms with the largest γ become the analog stage,
  then single-atom swaps among the strongest remaining atoms lower the
  least-squares residual further.
- spectral_efficiency: log-det rate of a combiner on a given channel

Usage:
    from src.combiner.hybrid import build_dictionary, mmse_digital, sbl_hybrid_combiner

    w_mmse = mmse_digital(h_hat, k_u=12, sigma_v2=0.1)
    pair = sbl_hybrid_combiner(w_mmse, build_dictionary(64, 128), n_rf=16, cfg=SblConfig(),
                               sigma_v2=0.1)
    rate = spectral_efficiency(h, pair.w_rf, pair.w_bb, sigma_v2=0.1, k_u=12)
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field

from src.core.errors import ContractViolation, DegenerateSolutionError, RankError
from src.core.numerics import as_matrix, pinv, solve_hpd

logger = logging.getLogger(__name__)


class SblConfig(BaseModel):
    """EM settings for the sparse hybrid combiner.

    The EM runs on the target scaled to unit mean entry power, and
    ``sigma_a2`` is the approximation-error variance in those units. When
    unset it is the receiver noise variance passed by the caller, times
    ``error_ratio`` if that is given.

    After the EM the support is refined by single-atom swaps against the
    ``candidate_factor`` x N_RF atoms with the largest γ, keeping a swap
    only when it lowers the least-squares residual.
    """
    model_config = ConfigDict(frozen=True)

    s: Optional[int] = Field(None, ge=2)
    sigma_a2: Optional[float] = Field(None, gt=0)
    error_ratio: Optional[float] = Field(None, gt=0)
    max_em_iters: int = Field(200, ge=1)
    rel_tol: float = Field(1e-4, gt=0)
    gamma_floor: float = Field(1e-12, gt=0)
    refine: bool = True
    candidate_factor: int = Field(3, ge=1)
    max_swap_passes: int = Field(20, ge=1)

    def resolve_sigma_a2(self, sigma_v2: Optional[float]) -> float:
        if self.sigma_a2 is not None:
            return self.sigma_a2
        if sigma_v2 is None or sigma_v2 <= 0:
            raise ContractViolation("SBL needs sigma_a2 or a positive noise variance")
        return sigma_v2 * (self.error_ratio if self.error_ratio is not None else 1.0)


@dataclass(frozen=True)
class AngularDictionary:
    """Array responses on the grid cos φ_s = 2(s−1)/S − 1"""
    g_r: np.ndarray
    angles: np.ndarray

    @property
    def size(self) -> int:
        return self.g_r.shape[1]


@dataclass
class CombinerPair:
    """Analog/baseband split W ≈ W_RF W_BB"""
    w_rf: np.ndarray
    w_bb: np.ndarray
    selected_indices: List[int]
    gamma_trace: List[np.ndarray] = field(default_factory=list)
    residual_trace: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    refined_residual: Optional[float] = None
    swaps: int = 0
    spectral_efficiency: Optional[float] = None

    @property
    def combiner(self) -> np.ndarray:
        return self.w_rf @ self.w_bb


def mmse_digital(h_hat, k_u: int, sigma_v2: float) -> np.ndarray:
    """Fully digital MMSE combiner Ĥ(ĤᴴĤ + K_Uσ²I)⁻¹, N_BS x K_U."""
    h_hat = as_matrix(h_hat, "channel estimate")
    gram = h_hat.conj().T @ h_hat + k_u * sigma_v2 * np.eye(h_hat.shape[1])
    return solve_hpd(gram, h_hat.conj().T).conj().T


def build_dictionary(n_bs: int, s: int, d_r_over_lambda: float = 0.5) -> AngularDictionary:
    """Unit-norm array responses on a uniform grid in cos φ."""
    if s < 2:
        raise ContractViolation(f"dictionary needs at least 2 atoms, got {s}")
    cosines = 2 * np.arange(s) / s - 1
    m = np.arange(n_bs)[:, None]
    g_r = np.exp(-2j * np.pi * d_r_over_lambda * m * cosines[None, :]) / np.sqrt(n_bs)
    return AngularDictionary(g_r=g_r, angles=np.arccos(cosines))


def _top_indices(gamma: np.ndarray, n: int) -> np.ndarray:
    # stable sort on −γ: equal γ keep ascending index order
    return np.sort(np.argsort(-gamma, kind="stable")[:n])


def _support_fit(g_r: np.ndarray, w_mmse: np.ndarray, support: np.ndarray):
    w_rf = g_r[:, support]
    w_bb = pinv(w_rf) @ w_mmse
    return w_rf, w_bb, float(np.linalg.norm(w_rf @ w_bb - w_mmse))


def _residual(g_r: np.ndarray, w_mmse: np.ndarray, support: np.ndarray) -> float:
    q, _ = np.linalg.qr(g_r[:, support])
    return float(np.linalg.norm(w_mmse - q @ (q.conj().T @ w_mmse)))


def refine_support(g_r: np.ndarray, w_mmse: np.ndarray, support: np.ndarray,
                   candidates: np.ndarray, max_passes: int = 20) -> Tuple[np.ndarray, float, int]:
    """Local search over single-atom swaps.

    Each pass tries, position by position, every candidate outside the
    support and keeps the best swap if it lowers the LS residual. Stops
    after a pass without a swap.

    Returns:
        (sorted support, its residual, number of swaps made)
    """
    support = np.array(support)
    best = _residual(g_r, w_mmse, support)
    swaps = 0
    for _ in range(max_passes):
        swapped = False
        for position in range(support.size):
            outside = [c for c in candidates if c not in support]
            trial_best, trial_atom = best, None
            for atom in outside:
                trial = support.copy()
                trial[position] = atom
                residual = _residual(g_r, w_mmse, trial)
                if residual < trial_best * (1 - 1e-9):
                    trial_best, trial_atom = residual, atom
            if trial_atom is not None:
                support[position] = trial_atom
                best = trial_best
                swaps += 1
                swapped = True
        if not swapped:
            break
    return np.sort(support), best, swaps


def sbl_hybrid_combiner(w_mmse, dictionary: AngularDictionary, n_rf: int,
                        cfg: SblConfig, sigma_v2: Optional[float] = None) -> CombinerPair:
    """Sparse hybrid approximation of a digital combiner by SBL-EM.

    Each iteration computes the Gaussian posterior of the dictionary
    weights (mean ℳ, covariance Π) and updates γ_i = ‖ℳ(i,:)‖²/K_U + Π_ii.
    Π and ℳ are evaluated through the N_BS x N_BS evidence covariance
    σ_a²I + G Ω Gᴴ, which stays well conditioned as γ entries vanish.

    Args:
        w_mmse: target combiner, N_BS x K_U
        dictionary: candidate analog columns
        n_rf: number of RF chains (atoms to keep)
        cfg: EM settings
        sigma_v2: receiver noise variance, the default σ_a²

    Returns:
        CombinerPair whose W_BB is the least-squares fit on the chosen atoms
    """
    w = as_matrix(w_mmse, "W_MMSE")
    g = dictionary.g_r
    n_bs, k_u = w.shape
    n_atoms = dictionary.size
    if g.shape[0] != n_bs:
        raise ContractViolation(f"dictionary has {g.shape[0]} rows, combiner has {n_bs}")
    if not 1 <= n_rf <= n_atoms:
        raise ContractViolation(f"n_rf ({n_rf}) must lie in [1, S={n_atoms}]")

    power = float(np.linalg.norm(w) ** 2) / (n_bs * k_u)
    if power == 0:
        raise DegenerateSolutionError("target combiner is zero")
    sigma_a2 = cfg.resolve_sigma_a2(sigma_v2)
    target = w / np.sqrt(power)

    gamma = np.ones(n_atoms)
    gamma_trace: List[np.ndarray] = []
    residual_trace: List[float] = []
    support = _top_indices(gamma, n_rf)
    converged = False
    iteration = 0

    for iteration in range(1, cfg.max_em_iters + 1):
        # E-step
        evidence = sigma_a2 * np.eye(n_bs) + (g * gamma) @ g.conj().T
        solved = solve_hpd(evidence, np.hstack([g, target]))
        inv_g, inv_w = solved[:, :n_atoms], solved[:, n_atoms:]
        posterior_mean = gamma[:, None] * (g.conj().T @ inv_w)
        posterior_var = gamma - gamma ** 2 * np.real(np.sum(g.conj() * inv_g, axis=0))

        # M-step
        updated = np.sum(np.abs(posterior_mean) ** 2, axis=1) / k_u + posterior_var
        if np.all(updated < cfg.gamma_floor):
            raise DegenerateSolutionError(
                f"all hyperparameters fell below {cfg.gamma_floor:g} at iteration {iteration}"
            )
        updated = np.maximum(updated, cfg.gamma_floor)

        new_support = _top_indices(updated, n_rf)
        change = np.max(np.abs(updated[new_support] - gamma[new_support]) / gamma[new_support])
        stable = np.array_equal(new_support, support)
        gamma, support = updated, new_support
        gamma_trace.append(gamma.copy())
        residual_trace.append(_support_fit(g, w, support)[2])

        if stable and change < cfg.rel_tol:
            converged = True
            break

    if not converged:
        logger.debug(f"SBL-EM hit the iteration cap ({cfg.max_em_iters})")

    swaps = 0
    # distinct atoms are independent, so n_rf >= N_BS already spans everything
    if cfg.refine and n_rf < min(n_atoms, n_bs):
        candidates = np.argsort(-gamma, kind="stable")[:min(n_atoms, cfg.candidate_factor * n_rf)]
        support, _, swaps = refine_support(g, w, support, candidates, cfg.max_swap_passes)
        if swaps:
            logger.debug(f"support refinement made {swaps} swap(s)")

    w_rf, w_bb, residual = _support_fit(g, w, support)
    return CombinerPair(
        w_rf=w_rf,
        w_bb=w_bb,
        selected_indices=support.tolist(),
        gamma_trace=gamma_trace,
        residual_trace=residual_trace,
        iterations=iteration,
        converged=converged,
        refined_residual=residual,
        swaps=swaps,
    )



def spectral_efficiency(h, w_rf, w_bb, sigma_v2: float, k_u: int) -> float:
    """log₂det(I + R_n⁻¹JᴴHHᴴJ/(σ²K_U)) with J = W_RF W_BB and R_n = JᴴJ.

    Evaluated through the Cholesky factor of R_n, which gives a Hermitian
    matrix with the same determinant.
    """
    h = as_matrix(h, "channel")
    j = as_matrix(w_rf, "W_RF") @ as_matrix(w_bb, "W_BB")
    if sigma_v2 <= 0:
        raise ContractViolation(f"noise variance must be positive, got {sigma_v2}")
    if np.linalg.matrix_rank(j) < j.shape[1]:
        raise RankError(f"combiner product has rank {np.linalg.matrix_rank(j)} < {j.shape[1]}")
    lower = scipy.linalg.cholesky(j.conj().T @ j, lower=True)
    whitened = scipy.linalg.solve_triangular(lower, j.conj().T @ h, lower=True)
    eigenvalues = np.linalg.eigvalsh(whitened @ whitened.conj().T)
    eigenvalues = np.clip(eigenvalues, 0.0, None)
    return float(np.sum(np.log2(1 + eigenvalues / (sigma_v2 * k_u))))


def digital_pair(w_mmse: np.ndarray) -> CombinerPair:
    """Express a fully digital combiner as the pair (I, W)."""
    n_bs = w_mmse.shape[0]
    return CombinerPair(w_rf=np.eye(n_bs, dtype=np.complex128), w_bb=w_mmse,
                        selected_indices=list(range(n_bs)), converged=True)

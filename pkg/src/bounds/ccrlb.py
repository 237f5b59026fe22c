#!/usr/bin/env python3
"""
Constrained Cramér-Rao Bounds for Semi-Blind Estimation
=======================================================

With the whitening factor known, the channel H = SΣTᴴ is determined by the
unitary K_U x K_U matrix T. The bound on T uses the augmented parameter
ξ = [vec(T); vec(T*)], the Jacobian J(ξ) of the unitarity constraints
t_iᴴt_j = δ_ij, and an orthonormal basis B of its null space:

    C_ξ = (τ_p P_p/σ²) · I₂ ⊗ |Σ|² ⊗ I_K
    C_T = B (Bᴴ C_ξ B)⁻¹ Bᴴ
    C_H = Υ [C_T]₁₁* Υᴴ,  Υ = SΣ ⊗ I_K   (for h = vec(Hᵀ))

The diagonal of C_H has the closed form

    (σ²/(τ_p P_p)) Σ_ν Σ_j σ_ν²/(σ_j² + σ_ν²) |S(k,ν)|² |T(l,j)|²

which sums to σ²K_U²/(2τ_p P_p), against σ²K_U N_BS/(τ_p P_p) for ML.

Usage:
    from src.bounds.ccrlb import CrlbInputs, ccrlb, ml_mse, wd_sb_gain

    result = ccrlb(CrlbInputs.from_channel(h, p_p=1.0, tau_p=16, sigma2=0.1))
    print(result.total_mse_bound, ml_mse(0.1, 12, 64, 1.0, 16), wd_sb_gain(64, 12))
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from src.core.errors import ContractViolation, DegenerateConstraintError, SingularWeightError
from src.core.numerics import as_matrix, solve_hpd, svd

logger = logging.getLogger(__name__)

UNITARY_TOL = 1e-10
RANK_TOL = 1e-10


@dataclass(frozen=True)
class CrlbInputs:
    """SVD factors of H plus pilot power and noise level"""
    s: np.ndarray
    sigma_sv: np.ndarray
    t: np.ndarray
    p_p: float
    tau_p: int
    sigma2: float

    def __post_init__(self):
        k = self.t.shape[0]
        if self.t.shape != (k, k) or self.s.shape[1] != k or self.sigma_sv.shape != (k,):
            raise ContractViolation(
                f"inconsistent shapes S {self.s.shape}, Σ {self.sigma_sv.shape}, T {self.t.shape}"
            )
        if np.linalg.norm(self.t.conj().T @ self.t - np.eye(k)) > UNITARY_TOL * max(1, k):
            raise ContractViolation("T must be unitary")
        if np.any(self.sigma_sv < 0) or np.any(np.diff(self.sigma_sv) > 0):
            raise ContractViolation("singular values must be nonnegative and descending")

    @property
    def k_u(self) -> int:
        return self.t.shape[0]

    @property
    def scale(self) -> float:
        """σ²/(τ_p P_p)"""
        return self.sigma2 / (self.tau_p * self.p_p)

    @classmethod
    def from_channel(cls, h, p_p: float, tau_p: int, sigma2: float) -> "CrlbInputs":
        result = svd(as_matrix(h, "channel"))
        return cls(s=result.u, sigma_sv=result.s, t=result.vh.conj().T,
                   p_p=p_p, tau_p=tau_p, sigma2=sigma2)


@dataclass(frozen=True)
class CrlbResult:
    c_h: np.ndarray
    per_element: np.ndarray
    total_mse_bound: float


def constraint_jacobian(t) -> np.ndarray:
    """J(ξ) for the K_U² constraints t_iᴴ t_j − δ_ij = 0.

    Row i·K + j holds ∂/∂vec(T) (t_iᴴ in column block j) followed by
    ∂/∂vec(T*) (t_j in column block i).
    """
    t = as_matrix(t, "T")
    k = t.shape[0]
    jac = np.zeros((k * k, 2 * k * k), dtype=np.complex128)
    for i in range(k):
        for j in range(k):
            row = i * k + j
            jac[row, j * k:(j + 1) * k] += t[:, i].conj()
            jac[row, k * k + i * k:k * k + (i + 1) * k] += t[:, j]
    return jac


def null_space_basis(jac) -> np.ndarray:
    """Orthonormal basis of the null space of J from its trailing right singular vectors."""
    jac = as_matrix(jac, "constraint Jacobian")
    n_constraints, n_params = jac.shape
    _, s, vh = scipy.linalg.svd(jac, full_matrices=True)
    rank = int(np.count_nonzero(s > RANK_TOL * max(jac.shape) * (s[0] if s.size else 0)))
    if rank != n_constraints:
        raise DegenerateConstraintError(
            f"constraint Jacobian has rank {rank}, expected {n_constraints}"
        )
    return vh[rank:].conj().T


def closed_form_null_space(t) -> np.ndarray:
    """Explicit null-space basis: column (a, b) is [vec(T E_ab); −vec(T* E_ba)]/√2.

    Small-K_U oracle for null_space_basis.
    """
    t = as_matrix(t, "T")
    k = t.shape[0]
    basis = np.zeros((2 * k * k, k * k), dtype=np.complex128)
    for a in range(k):
        for b in range(k):
            col = a * k + b
            basis[b * k:(b + 1) * k, col] = t[:, a]
            basis[k * k + a * k:k * k + (a + 1) * k, col] = -t[:, b].conj()
    return basis / np.sqrt(2)


def fisher_information_xi(sigma_sv: np.ndarray, p_p: float, tau_p: int,
                          sigma2: float) -> np.ndarray:
    """C_ξ = (τ_p P_p/σ²) I₂ ⊗ |Σ|² ⊗ I_K."""
    k = sigma_sv.size
    core = np.kron(np.diag(np.abs(sigma_sv) ** 2), np.eye(k))
    return (tau_p * p_p / sigma2) * np.kron(np.eye(2), core)


def sigma_tilde(t, sigma_sv: np.ndarray) -> np.ndarray:
    """Diagonal of 2·Bᴴ(I₂ ⊗ |Σ|² ⊗ I_K)B for the explicit basis B.

    Entry a·K + b equals σ_a² + σ_b².
    """
    basis = closed_form_null_space(t)
    unit_fim = fisher_information_xi(sigma_sv, 1.0, 1, 1.0)
    reduced = basis.conj().T @ unit_fim @ basis
    return 2 * np.real(np.diag(reduced))


def constrained_bound_t(basis: np.ndarray, fim: np.ndarray) -> np.ndarray:
    """C_T = B (Bᴴ C_ξ B)⁻¹ Bᴴ."""
    reduced = basis.conj().T @ fim @ basis
    return basis @ solve_hpd(reduced, basis.conj().T)


def per_element_bound(s: np.ndarray, sigma_sv: np.ndarray, t: np.ndarray, scale: float,
                      unit_weights: bool = False) -> np.ndarray:
    """Closed-form per-entry MSE bound, N_BS x K_U."""
    power = np.abs(sigma_sv) ** 2
    if unit_weights:
        weights = np.ones((power.size, power.size))
    else:
        denominator = power[None, :] + power[:, None]
        if np.any(denominator == 0):
            raise SingularWeightError("zero singular values leave the bound weights undefined")
        # weights[ν, j] = σ_ν²/(σ_j² + σ_ν²)
        weights = power[:, None] / denominator
    return scale * (np.abs(s) ** 2 @ weights @ (np.abs(t) ** 2).T)


def ccrlb(inputs: CrlbInputs, full: bool = True) -> CrlbResult:
    """Constrained CRLB on H for the perfect-whitening semi-blind estimator.

    Args:
        inputs: SVD factors, pilot power and noise level
        full: return the full (N_BS·K_U)² matrix C_H rather than its diagonal

    Returns:
        CrlbResult with matrix-form C_H and the closed-form per-element bound
    """
    if np.any(inputs.sigma_sv == 0):
        raise SingularWeightError("rank-deficient channel: a singular value is zero")
    k = inputs.k_u

    basis = null_space_basis(constraint_jacobian(inputs.t))
    fim = fisher_information_xi(inputs.sigma_sv, inputs.p_p, inputs.tau_p, inputs.sigma2)
    c_t = constrained_bound_t(basis, fim)
    c_t11 = c_t[:k * k, :k * k]

    upsilon = np.kron(inputs.s * inputs.sigma_sv, np.eye(k))
    c_h = upsilon @ c_t11.conj() @ upsilon.conj().T

    per_element = per_element_bound(inputs.s, inputs.sigma_sv, inputs.t, inputs.scale)
    total = float(per_element.sum())
    logger.debug(f"C-CRLB total {total:.4e} for K_U={k}")
    return CrlbResult(
        c_h=c_h if full else np.real(np.diag(c_h)),
        per_element=per_element,
        total_mse_bound=total,
    )


def ml_mse(sigma2: float, k_u: int, n_bs: int, p_p: float, tau_p: int) -> float:
    """Total MSE of the training-only ML estimate, σ²K_U N_BS/(P_p τ_p)."""
    return sigma2 * k_u * n_bs / (p_p * tau_p)


def wd_sb_mse(sigma2: float, k_u: int, p_p: float, tau_p: int) -> float:
    """Total C-CRLB MSE σ²K_U²/(2P_p τ_p), independent of the channel."""
    return sigma2 * k_u ** 2 / (2 * p_p * tau_p)


def wd_sb_gain(n_bs: int, k_u: int) -> float:
    """MSE gain of semi-blind over ML in dB: 10·log₁₀(2N_BS/K_U)."""
    if n_bs < 1 or k_u < 1:
        raise ContractViolation("n_bs and k_u must be >= 1")
    return float(10 * np.log10(2 * n_bs / k_u))


def mse_to_nmse_db(mse: float, channel_power: float) -> float:
    """Total MSE as dB NMSE for a channel with ‖H‖²_F = channel_power."""
    return float(10 * np.log10(mse / channel_power))

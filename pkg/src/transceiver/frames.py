#!/usr/bin/env python3
"""
Pilot/Data Frames, Analog Combiner and Received Blocks
======================================================

Everything between the users' transmit symbols and the digital front-end
of the base station: orthogonal pilots, QPSK data, the constant-modulus
phase-shifter combiner W_RF and the received blocks

    Y = W_RFᴴ (H Xᴴ + V)

When the combiner stacks B = N_BS/N_RF blocks, each block sees its own
noise realization and the block outputs are stacked row-wise.

Usage:
    from src.transceiver.frames import make_pilots, make_rf_combiner, receive_pilots

    pilots = make_pilots(tau_p=16, k_u=12, p_p=1.0)
    combiner = make_rf_combiner(64, 16, n_q=4, mode="random", rng=rng)
    frame = receive_pilots(channel.h, pilots, combiner, sigma_v2=0.1, rng=rng)
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.core.errors import ConfigError, ContractViolation
from src.core.numerics import as_matrix, complex_gaussian

logger = logging.getLogger(__name__)

COMBINER_MODES = ("random", "unitary_validation")


@dataclass(frozen=True)
class PilotBlock:
    """τ_p x K_U pilots with X_pᴴX_p = P_p τ_p I"""
    x_p: np.ndarray
    p_p: float

    @property
    def tau_p(self) -> int:
        return self.x_p.shape[0]

    @property
    def k_u(self) -> int:
        return self.x_p.shape[1]


@dataclass(frozen=True)
class DataBlock:
    """N x K_U Gray-mapped QPSK symbols of power P_d"""
    x_d: np.ndarray
    p_d: float
    bits: np.ndarray  # N x K_U x 2, (in-phase, quadrature)

    @property
    def n(self) -> int:
        return self.x_d.shape[0]


@dataclass(frozen=True)
class RfCombiner:
    """Constant-modulus analog combiner.

    ``n_blocks`` > 1 means the columns are B stacked N_BS x N_RF blocks that
    observe independent noise. ``n_q`` is None for the DFT validation
    combiner, whose phases sit on the N_BS-th roots of unity.
    """
    w_rf: np.ndarray
    n_q: Optional[int]
    mode: str
    n_blocks: int = 1

    @property
    def n_bs(self) -> int:
        return self.w_rf.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.w_rf.shape[1]

    @property
    def block_width(self) -> int:
        return self.n_outputs // self.n_blocks

    def blocks(self):
        width = self.block_width
        for b in range(self.n_blocks):
            yield self.w_rf[:, b * width:(b + 1) * width]


@dataclass(frozen=True)
class ReceivedFrame:
    """Digital front-end samples for one block of symbols"""
    y: np.ndarray
    sigma_v2: float
    adc_bits: float = np.inf

    @property
    def quantized(self) -> bool:
        return np.isfinite(self.adc_bits)


def dft_matrix(n: int) -> np.ndarray:
    """Unnormalized n x n DFT matrix, entries exp(−j2πkl/n)."""
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n)


def make_pilots(tau_p: int, k_u: int, p_p: float = 1.0) -> PilotBlock:
    """First K_U columns of the τ_p-point DFT, scaled by √P_p."""
    if tau_p < k_u:
        raise ConfigError(f"tau_p ({tau_p}) must be >= k_u ({k_u})")
    if p_p <= 0:
        raise ConfigError(f"pilot power must be positive, got {p_p}")
    x_p = np.sqrt(p_p) * dft_matrix(tau_p)[:, :k_u]
    return PilotBlock(x_p=x_p, p_p=p_p)


QPSK_LEVEL = 1 / np.sqrt(2)


def qpsk_modulate(bits: np.ndarray) -> np.ndarray:
    """Gray QPSK: bit 0 maps to +, bit 1 to −, on each of I and Q."""
    return QPSK_LEVEL * ((1 - 2 * bits[..., 0]) + 1j * (1 - 2 * bits[..., 1]))


def qpsk_demodulate(symbols: np.ndarray) -> np.ndarray:
    """Hard quadrant decision back to Gray bits."""
    return np.stack([symbols.real < 0, symbols.imag < 0], axis=-1).astype(np.int8)


def make_data(n: int, k_u: int, p_d: float, rng: np.random.Generator) -> DataBlock:
    """I.i.d. uniform QPSK data of power P_d."""
    if n < 1:
        raise ConfigError(f"data block length must be >= 1, got {n}")
    bits = rng.integers(0, 2, size=(n, k_u, 2)).astype(np.int8)
    return DataBlock(x_d=np.sqrt(p_d) * qpsk_modulate(bits), p_d=p_d, bits=bits)


def make_rf_combiner(n_bs: int, n_rf: int, n_q: int, mode: str = "random",
                     rng: Optional[np.random.Generator] = None,
                     stacked: bool = True) -> RfCombiner:
    """Quantized-phase analog combiner.

    Args:
        n_bs: receive antennas
        n_rf: RF chains per block
        n_q: phase-shifter resolution in bits
        mode: "random" (phases uniform over the 2^n_q grid) or
            "unitary_validation" (scaled DFT, exactly unitary)
        rng: generator, required in random mode
        stacked: build all B = N_BS/N_RF blocks (N_BS columns) instead of one block

    Returns:
        RfCombiner with every entry of modulus 1/√N_BS
    """
    if mode not in COMBINER_MODES:
        raise ConfigError(f"unknown combiner mode '{mode}'")
    if n_rf < 1 or n_rf > n_bs:
        raise ConfigError(f"n_rf ({n_rf}) must lie in [1, n_bs={n_bs}]")
    if stacked and n_bs % n_rf:
        raise ConfigError(f"n_bs ({n_bs}) must be divisible by n_rf ({n_rf}) to stack blocks")
    if n_q < 1:
        raise ConfigError(f"phase resolution must be >= 1 bit, got {n_q}")

    n_cols = n_bs if stacked else n_rf
    n_blocks = n_bs // n_rf if stacked else 1

    if mode == "unitary_validation":
        w_rf = dft_matrix(n_bs)[:, :n_cols] / np.sqrt(n_bs)
        return RfCombiner(w_rf=w_rf, n_q=None, mode=mode, n_blocks=n_blocks)

    if rng is None:
        raise ContractViolation("random combiner mode needs an rng")
    levels = 2 ** n_q
    phases = rng.integers(0, levels, size=(n_bs, n_cols)) * (2 * np.pi / levels)
    w_rf = np.exp(1j * phases) / np.sqrt(n_bs)
    return RfCombiner(w_rf=w_rf, n_q=n_q, mode=mode, n_blocks=n_blocks)


def _receive(h, x: np.ndarray, combiner: RfCombiner, sigma_v2: float,
             rng: np.random.Generator) -> ReceivedFrame:
    h = as_matrix(getattr(h, "h", h), "channel")
    if h.shape[0] != combiner.n_bs or h.shape[1] != x.shape[1]:
        raise ContractViolation(
            f"shapes do not line up: H {h.shape}, W_RF {combiner.w_rf.shape}, X {x.shape}"
        )
    if sigma_v2 < 0:
        raise ContractViolation(f"noise variance must be nonnegative, got {sigma_v2}")
    clean = h @ x.conj().T
    outputs = []
    for w_b in combiner.blocks():
        noise = complex_gaussian(rng, combiner.n_bs, x.shape[0], sigma_v2)
        outputs.append(w_b.conj().T @ (clean + noise))
    return ReceivedFrame(y=np.vstack(outputs), sigma_v2=sigma_v2)


def receive_pilots(h, pilots: PilotBlock, combiner: RfCombiner, sigma_v2: float,
                   rng: np.random.Generator) -> ReceivedFrame:
    """Y_p = W_RFᴴ(H X_pᴴ + V_p), one noise draw per combiner block."""
    return _receive(h, pilots.x_p, combiner, sigma_v2, rng)


def receive_data(h, data: DataBlock, combiner: RfCombiner, sigma_v2: float,
                 rng: np.random.Generator) -> ReceivedFrame:
    """Y_d = W_RFᴴ(H X_dᴴ + V_d), one noise draw per combiner block."""
    return _receive(h, data.x_d, combiner, sigma_v2, rng)


def per_user_projection(frame: ReceivedFrame, pilots: PilotBlock, combiner: RfCombiner,
                        k: int) -> np.ndarray:
    """Single-user view W_RF Y_p x_k/(P_p τ_p).

    Free of other users' pilots only because the pilots are orthogonal.
    """
    x_k = pilots.x_p[:, k]
    return combiner.w_rf @ frame.y @ x_k / (pilots.p_p * pilots.tau_p)

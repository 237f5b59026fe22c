#!/usr/bin/env python3
"""
Low-Resolution ADC Model
========================

Uniform mid-rise quantizer applied independently to the real and imaginary
parts of the received samples. Each RF chain has its own gain control: the
full-scale range R of a row of samples (one RF chain in one combiner block)
is clip_scale x (RMS of that row's part), capped at the row's peak so a
short burst never wastes levels beyond its largest sample. A fixed full
scale can be given instead. Out-of-range values saturate at the outer
levels.

Levels for b bits: (i + ½)Δ − R, i = 0..2^b − 1, with Δ = 2R/2^b.

Usage:
    from src.transceiver.adc import adc_quantize, quantize_frame

    y_q = adc_quantize(frame.y, bits=4)
    frame_q = quantize_frame(frame, bits=6)
"""

import math
from dataclasses import replace
from typing import Optional, Union

import numpy as np

from src.core.errors import ConfigError
from src.transceiver.frames import ReceivedFrame

DEFAULT_CLIP_SCALE = 3.0
MAX_BITS = 16


class UniformQuantizer:
    """Symmetric mid-rise quantizer over [−R, R]

    ``full_scale`` may be an array broadcastable against the input, one R
    per row for instance. Rows with R = 0 quantize to zero.
    """

    def __init__(self, full_scale: Union[float, np.ndarray], bits: int):
        self.full_scale = full_scale
        self.bits = bits
        self.n_levels = 2 ** bits
        self.step = 2.0 * np.asarray(full_scale, dtype=float) / self.n_levels

    def levels(self) -> np.ndarray:
        return (np.arange(self.n_levels) + 0.5) * self.step - self.full_scale

    def quantize(self, x: np.ndarray) -> np.ndarray:
        full_scale = np.asarray(self.full_scale, dtype=float)
        live = full_scale > 0
        if not np.any(live):
            return np.zeros_like(x)
        step = np.where(live, self.step, 1.0)
        index = np.clip(np.floor((x + full_scale) / step), 0, self.n_levels - 1)
        return np.where(live, (index + 0.5) * step - full_scale, 0.0)


def _check_bits(bits) -> bool:
    """True when bits means pass-through."""
    if bits is None or (isinstance(bits, float) and math.isinf(bits)):
        return True
    if bits != int(bits) or not 1 <= bits <= MAX_BITS:
        raise ConfigError(f"ADC resolution must be an integer in [1, {MAX_BITS}] or inf, got {bits}")
    return False


def agc_full_scale(part: np.ndarray, clip_scale: float = DEFAULT_CLIP_SCALE,
                   per_chain: bool = True) -> np.ndarray:
    """Full-scale range per row of a real sample matrix.

    R = min(clip_scale x RMS, peak), per row when ``per_chain`` is set,
    otherwise one value for the whole matrix (returned with shape (1, 1)).
    """
    part = np.atleast_2d(np.asarray(part, dtype=float))
    axis = 1 if per_chain else None
    rms = np.sqrt(np.mean(part ** 2, axis=axis, keepdims=True))
    peak = np.max(np.abs(part), axis=axis, keepdims=True)
    return np.minimum(clip_scale * rms, peak)


def adc_quantize(y: np.ndarray, bits, clip_scale: float = DEFAULT_CLIP_SCALE,
                 full_scale: Optional[float] = None, per_chain: bool = True) -> np.ndarray:
    """Quantize real and imaginary parts of y with a b-bit uniform ADC.

    Args:
        y: complex samples, one row per RF chain output
        bits: resolution in bits, or math.inf for an ideal converter
        clip_scale: full scale in units of the per-part RMS
        full_scale: fixed R shared by both parts (overrides clip_scale)
        per_chain: separate gain control per row (False: one R per part)

    Returns:
        Quantized samples, same shape as y
    """
    if _check_bits(bits):
        return y
    if clip_scale <= 0:
        raise ConfigError(f"clip_scale must be positive, got {clip_scale}")
    y = np.asarray(y)
    shape = y.shape
    parts = []
    for part in (y.real, y.imag):
        part = np.atleast_2d(part)
        r = full_scale if full_scale is not None else agc_full_scale(part, clip_scale, per_chain)
        parts.append(UniformQuantizer(r, int(bits)).quantize(part))
    return (parts[0] + 1j * parts[1]).reshape(shape)


def quantize_frame(frame: ReceivedFrame, bits, clip_scale: float = DEFAULT_CLIP_SCALE) -> ReceivedFrame:
    """Frame with its samples passed through the ADC."""
    if _check_bits(bits):
        return frame
    return replace(frame, y=adc_quantize(frame.y, bits, clip_scale), adc_bits=float(bits))

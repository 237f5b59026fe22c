"""Tests for pilots, data, the analog combiner, received frames and the ADC."""

import math

import numpy as np
import pytest

from src.core.errors import ConfigError, ContractViolation
from src.core.numerics import make_rng
from src.transceiver.adc import UniformQuantizer, adc_quantize, agc_full_scale, quantize_frame
from src.transceiver.frames import (QPSK_LEVEL, ReceivedFrame, make_data, make_pilots,
                                    make_rf_combiner, per_user_projection, qpsk_demodulate,
                                    qpsk_modulate, receive_data, receive_pilots)
from tests.helpers import random_complex


# ============================================================================
# PILOTS AND DATA
# ============================================================================


class TestPilots:

    @pytest.mark.parametrize("tau_p,k_u", [(2, 2), (16, 12), (8, 3), (5, 5)])
    def test_orthogonality(self, tau_p, k_u):
        pilots = make_pilots(tau_p, k_u, p_p=1.0)
        gram = pilots.x_p.conj().T @ pilots.x_p
        assert np.allclose(gram, tau_p * np.eye(k_u), atol=1e-10)

    def test_power_scaling(self):
        pilots = make_pilots(8, 4, p_p=2.5)
        assert np.allclose(pilots.x_p.conj().T @ pilots.x_p, 2.5 * 8 * np.eye(4), atol=1e-10)

    def test_too_few_pilots(self):
        with pytest.raises(ConfigError, match="tau_p"):
            make_pilots(1, 2)


class TestData:

    def test_constellation(self, rng):
        data = make_data(500, 4, 2.0, rng)
        assert np.allclose(np.abs(data.x_d.real), np.sqrt(1.0))
        assert np.allclose(np.abs(data.x_d.imag), np.sqrt(1.0))
        assert np.allclose(np.abs(data.x_d), np.sqrt(2.0))

    def test_sample_covariance(self):
        data = make_data(10_000, 4, 1.0, make_rng(0))
        cov = data.x_d.conj().T @ data.x_d / 10_000
        assert np.linalg.norm(cov - np.eye(4)) < 0.05

    def test_deterministic(self):
        a = make_data(20, 3, 1.0, make_rng(4)).x_d
        b = make_data(20, 3, 1.0, make_rng(4)).x_d
        assert np.array_equal(a, b)

    def test_gray_mapping(self):
        bits = np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=np.int8)
        symbols = qpsk_modulate(bits)
        assert np.allclose(symbols, QPSK_LEVEL * np.array([1 + 1j, 1 - 1j, -1 - 1j, -1 + 1j]))
        assert np.array_equal(qpsk_demodulate(symbols), bits)
        assert np.array_equal(qpsk_demodulate(-symbols), 1 - bits)


# ============================================================================
# RF COMBINER
# ============================================================================


class TestRfCombiner:

    @pytest.mark.parametrize("mode", ["random", "unitary_validation"])
    def test_constant_modulus(self, mode):
        combiner = make_rf_combiner(32, 8, 3, mode, make_rng(1))
        assert np.max(np.abs(np.abs(combiner.w_rf) * np.sqrt(32) - 1)) < 1e-12

    def test_unitary_validation(self):
        combiner = make_rf_combiner(8, 2, 4, "unitary_validation")
        assert np.allclose(combiner.w_rf.conj().T @ combiner.w_rf, np.eye(8), atol=1e-10)
        assert combiner.n_blocks == 4

    def test_one_bit_phases(self):
        combiner = make_rf_combiner(16, 4, 1, "random", make_rng(2))
        scaled = combiner.w_rf * np.sqrt(16)
        assert np.allclose(scaled.imag, 0, atol=1e-12)
        assert set(np.round(scaled.real).astype(int).ravel()) <= {-1, 1}

    def test_phases_on_grid(self):
        combiner = make_rf_combiner(16, 4, 3, "random", make_rng(3))
        steps = np.angle(combiner.w_rf) / (2 * np.pi / 8)
        assert np.allclose(steps, np.round(steps), atol=1e-9)

    def test_indivisible_stack(self):
        with pytest.raises(ConfigError, match="divisible"):
            make_rf_combiner(10, 4, 2, "random", make_rng(0))

    def test_single_block(self):
        combiner = make_rf_combiner(10, 4, 2, "random", make_rng(0), stacked=False)
        assert combiner.w_rf.shape == (10, 4)

    def test_random_needs_rng(self):
        with pytest.raises(ContractViolation, match="rng"):
            make_rf_combiner(8, 4, 2, "random")


# ============================================================================
# RECEIVED FRAMES
# ============================================================================


class TestReceive:

    def test_noiseless_pilots(self, rng):
        h = random_complex(rng, 16, 4)
        pilots = make_pilots(8, 4)
        combiner = make_rf_combiner(16, 4, 4, "random", rng)
        frame = receive_pilots(h, pilots, combiner, 0.0, rng)
        assert np.allclose(frame.y, combiner.w_rf.conj().T @ h @ pilots.x_p.conj().T)

    def test_noiseless_round_trip(self, rng):
        h = random_complex(rng, 16, 4)
        pilots = make_pilots(8, 4)
        combiner = make_rf_combiner(16, 4, 4, "unitary_validation")
        frame = receive_pilots(h, pilots, combiner, 0.0, rng)
        h_back = combiner.w_rf @ frame.y @ pilots.x_p / (pilots.p_p * pilots.tau_p)
        assert np.linalg.norm(h_back - h) <= 1e-9 * np.linalg.norm(h)

    def test_noiseless_data(self, rng):
        h = random_complex(rng, 8, 2)
        data = make_data(30, 2, 1.0, rng)
        combiner = make_rf_combiner(8, 4, 2, "random", rng)
        frame = receive_data(h, data, combiner, 0.0, rng)
        assert np.allclose(frame.y, combiner.w_rf.conj().T @ h @ data.x_d.conj().T)

    def test_noise_power(self):
        rng = make_rng(8)
        h = np.zeros((16, 4))
        pilots = make_pilots(4, 4)
        combiner = make_rf_combiner(16, 4, 4, "random", rng)
        samples = np.concatenate([receive_pilots(h, pilots, combiner, 0.5, rng).y.ravel()
                                  for _ in range(2000)])
        # every combiner column has unit norm
        assert np.mean(np.abs(samples) ** 2) == pytest.approx(0.5, rel=0.02)

    def test_accepts_realization_object(self, rng):
        class Holder:
            pass
        holder = Holder()
        holder.h = random_complex(rng, 8, 2)
        combiner = make_rf_combiner(8, 8, 2, "unitary_validation")
        frame = receive_pilots(holder, make_pilots(2, 2), combiner, 0.0, rng)
        assert frame.y.shape == (8, 2)

    def test_shape_mismatch(self, rng):
        combiner = make_rf_combiner(8, 4, 2, "random", rng)
        with pytest.raises(ContractViolation, match="shapes"):
            receive_pilots(np.ones((6, 2)), make_pilots(2, 2), combiner, 0.1, rng)

    def test_per_user_projection(self, rng):
        h = random_complex(rng, 16, 4)
        pilots = make_pilots(8, 4)
        combiner = make_rf_combiner(16, 4, 4, "unitary_validation")
        frame = receive_pilots(h, pilots, combiner, 0.0, rng)
        for k in range(4):
            assert np.allclose(per_user_projection(frame, pilots, combiner, k), h[:, k])


# ============================================================================
# ADC
# ============================================================================


class TestAdc:

    def test_infinite_bits_identity(self, rng):
        y = random_complex(rng, 4, 5)
        assert adc_quantize(y, math.inf) is y

    def test_zero_bits_rejected(self, rng):
        with pytest.raises(ConfigError, match="ADC resolution"):
            adc_quantize(random_complex(rng, 2, 2), 0)

    def test_one_bit_two_values(self, rng):
        y = random_complex(rng, 50, 50)
        q = adc_quantize(y, 1, full_scale=2.0)
        assert set(np.unique(q.real)) == {-1.0, 1.0}
        assert set(np.unique(q.imag)) == {-1.0, 1.0}

    def test_idempotent_with_fixed_scale(self, rng):
        y = random_complex(rng, 20, 20)
        once = adc_quantize(y, 4, full_scale=3.0)
        assert np.array_equal(adc_quantize(once, 4, full_scale=3.0), once)

    def test_error_bound(self, rng):
        y = 0.3 * random_complex(rng, 40, 40)
        quantizer = UniformQuantizer(3.0, 5)
        q = adc_quantize(y, 5, full_scale=3.0)
        inside = (np.abs(y.real) < 3.0) & (np.abs(y.imag) < 3.0)
        assert np.all(np.abs(q - y)[inside] <= quantizer.step / np.sqrt(2) + 1e-12)

    def test_monotone(self):
        x = np.linspace(-5, 5, 1001)
        q = UniformQuantizer(3.0, 3).quantize(x)
        assert np.all(np.diff(q) >= 0)
        assert q[0] == -3.0 + 0.375 and q[-1] == 3.0 - 0.375

    def test_levels(self):
        assert np.allclose(UniformQuantizer(1.0, 2).levels(), [-0.75, -0.25, 0.25, 0.75])

    def test_quantize_frame(self, rng):
        frame = ReceivedFrame(y=random_complex(rng, 8, 8), sigma_v2=0.1)
        quantized = quantize_frame(frame, 6)
        assert quantized.quantized and quantized.adc_bits == 6.0
        assert not frame.quantized
        assert quantize_frame(frame, math.inf) is frame

    def test_weak_chain_keeps_resolution(self, rng):
        y = np.vstack([100 * random_complex(rng, 1, 200), 0.01 * random_complex(rng, 1, 200)])
        per_chain = adc_quantize(y, 6)
        shared = adc_quantize(y, 6, per_chain=False)
        weak = np.linalg.norm(y[1])
        assert np.linalg.norm(per_chain[1] - y[1]) / weak < 0.05
        assert np.linalg.norm(shared[1] - y[1]) / weak > 1.0

    def test_full_scale_capped_at_peak(self):
        part = np.array([[1.0, -1.0, 1.0, -1.0], [2.0, 0.0, 0.0, 0.0]])
        assert np.allclose(agc_full_scale(part, 3.0), [[1.0], [2.0]])
        assert np.allclose(agc_full_scale(part, 0.5), [[0.5], [0.5]])
        assert agc_full_scale(part, 3.0, per_chain=False).shape == (1, 1)

    def test_silent_chain_stays_zero(self, rng):
        y = random_complex(rng, 3, 16)
        y[1] = 0
        q = adc_quantize(y, 4)
        assert np.all(np.isfinite(q))
        assert np.array_equal(q[1], np.zeros(16))

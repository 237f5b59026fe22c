"""Tests for the ML, RALS-SB and WD-SB channel estimators."""

import numpy as np
import pytest
from pydantic import ValidationError

from src.core.errors import ConfigError, ContractViolation
from src.core.numerics import make_rng
from src.estimators.base import ChannelEstimate, Method, back_project
from src.estimators.ml import estimate_ml
from src.estimators.rals_sb import RalsConfig, RalsSolver, estimate_rals_sb, joint_frame
from src.estimators.wd_sb import (WdSbConfig, estimate_wd_sb, estimate_whitening,
                                  perfect_whitening, procrustes_unitary)
from src.harness.metrics import nmse
from src.transceiver.frames import (ReceivedFrame, make_data, make_pilots, make_rf_combiner,
                                    qpsk_demodulate, receive_data, receive_pilots)
from tests.helpers import random_complex


def _setup(rng, n_bs=16, k_u=4, n_rf=4, tau_p=8, n_data=200, sigma2=0.0, mode="unitary_validation"):
    h = random_complex(rng, n_bs, k_u)
    pilots = make_pilots(tau_p, k_u)
    data = make_data(n_data, k_u, 1.0, rng)
    combiner = make_rf_combiner(n_bs, n_rf, 4, mode, rng)
    frame_p = receive_pilots(h, pilots, combiner, sigma2, rng)
    frame_d = receive_data(h, data, combiner, sigma2, rng)
    return h, pilots, data, combiner, frame_p, frame_d


# ============================================================================
# SHARED TYPES
# ============================================================================


class TestBase:

    def test_non_finite_estimate_rejected(self):
        with pytest.raises(ContractViolation, match="non-finite"):
            ChannelEstimate(h_hat=np.array([[np.nan]]), method=Method.ML)

    def test_back_project_shape_check(self, rng):
        combiner = make_rf_combiner(8, 4, 2, "unitary_validation")
        with pytest.raises(ContractViolation, match="outputs"):
            back_project(ReceivedFrame(y=np.ones((3, 2)), sigma_v2=0.1), combiner)

    def test_pseudo_inverse_removes_random_combiner(self, rng):
        h, pilots, _, combiner, frame_p, _ = _setup(rng, mode="random")
        z = back_project(frame_p, combiner, pseudo_inverse=True)
        assert np.allclose(z, h @ pilots.x_p.conj().T, atol=1e-9)


# ============================================================================
# ML
# ============================================================================


class TestMl:

    def test_noiseless_exact(self, rng):
        h, pilots, _, combiner, frame_p, _ = _setup(rng)
        estimate = estimate_ml(frame_p, pilots, combiner)
        assert estimate.method is Method.ML
        assert np.linalg.norm(estimate.h_hat - h) / np.linalg.norm(h) < 1e-9

    def test_noiseless_random_combiner_with_pseudo_inverse(self, rng):
        h, pilots, _, combiner, frame_p, _ = _setup(rng, mode="random")
        estimate = estimate_ml(frame_p, pilots, combiner, pseudo_inverse_combining=True)
        assert np.linalg.norm(estimate.h_hat - h) / np.linalg.norm(h) < 1e-8

    def test_linear_in_observations(self, rng):
        _, pilots, _, combiner, frame_a, _ = _setup(rng, sigma2=0.3)
        frame_b = ReceivedFrame(y=random_complex(rng, *frame_a.y.shape), sigma_v2=0.3)
        total = ReceivedFrame(y=frame_a.y + frame_b.y, sigma_v2=0.3)
        lhs = estimate_ml(total, pilots, combiner).h_hat
        rhs = estimate_ml(frame_a, pilots, combiner).h_hat + estimate_ml(frame_b, pilots, combiner).h_hat
        assert np.allclose(lhs, rhs)

    def test_pilot_length_mismatch(self, rng):
        _, _, _, combiner, frame_p, _ = _setup(rng)
        with pytest.raises(ContractViolation, match="tau_p"):
            estimate_ml(frame_p, make_pilots(10, 4), combiner)

    def test_mse_matches_closed_form(self):
        # sigma2=1, K_U=4, N_BS=16, P_p=1, tau_p=8 -> 8
        errors = []
        for trial in range(2000):
            rng = make_rng(99, trial)
            h = random_complex(rng, 16, 4)
            pilots = make_pilots(8, 4)
            combiner = make_rf_combiner(16, 4, 4, "unitary_validation")
            frame = receive_pilots(h, pilots, combiner, 1.0, rng)
            errors.append(np.linalg.norm(estimate_ml(frame, pilots, combiner).h_hat - h) ** 2)
        assert np.mean(errors) == pytest.approx(8.0, rel=0.05)


# ============================================================================
# RALS-SB
# ============================================================================


class TestRals:

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            RalsConfig(beta_u=0.0)
        with pytest.raises(ValidationError, match="positive"):
            RalsConfig(lambda_fading=[1.0, -1.0])

    def test_noiseless_needs_explicit_regularization(self, rng):
        _, pilots, _, combiner, frame_p, frame_d = _setup(rng, n_bs=8, k_u=2, n_rf=8, tau_p=4)
        with pytest.raises(ConfigError, match="beta"):
            estimate_rals_sb(joint_frame(frame_p, frame_d), pilots, combiner, RalsConfig(), rng)

    def test_noiseless_recovery(self, rng):
        h, pilots, data, combiner, frame_p, frame_d = _setup(rng, n_bs=8, k_u=2, n_rf=8, tau_p=4)
        cfg = RalsConfig(beta_u=1e-9, beta_v=1e-9, max_iters=200)
        estimate, x_d_hat = estimate_rals_sb(joint_frame(frame_p, frame_d), pilots, combiner, cfg, rng)
        assert estimate.method is Method.RALS_SB
        assert 10 * np.log10(nmse(estimate.h_hat, h)) < -60
        assert np.allclose(x_d_hat, data.x_d, atol=1e-3)

    def test_objective_non_increasing(self):
        for trial in range(200):
            rng = make_rng(5, trial)
            _, pilots, _, combiner, frame_p, frame_d = _setup(
                rng, n_bs=8, k_u=2, n_rf=4, tau_p=4, n_data=40, sigma2=0.1, mode="random")
            estimate, _ = estimate_rals_sb(joint_frame(frame_p, frame_d), pilots, combiner,
                                           RalsConfig(max_iters=30), rng)
            trace = np.asarray(estimate.objective_trace)
            assert np.all(np.diff(trace) <= 1e-9 * trace[0])

    def test_half_steps_are_minimizers(self, rng):
        _, pilots, _, combiner, frame_p, frame_d = _setup(rng, n_bs=8, k_u=2, n_rf=4, tau_p=4,
                                                          n_data=20, sigma2=0.1, mode="random")
        y = joint_frame(frame_p, frame_d).y
        solver = RalsSolver(y, combiner.w_rf, np.ones(2), 0.1, 0.1)
        v = random_complex(rng, 2, y.shape[1])
        u = solver.update_u(v)
        best = solver.objective(u, v)
        for _ in range(20):
            assert solver.objective(u + 1e-3 * random_complex(rng, *u.shape), v) >= best
        v_new = solver.update_v(u)
        best = solver.objective(u, v_new)
        for _ in range(20):
            assert solver.objective(u, v_new + 1e-3 * random_complex(rng, *v_new.shape)) >= best

    def test_high_snr_data_detection(self):
        rng = make_rng(21)
        _, pilots, data, combiner, frame_p, frame_d = _setup(rng, n_bs=16, k_u=4, n_rf=16, tau_p=8,
                                                             n_data=300, sigma2=0.01)
        _, x_d_hat = estimate_rals_sb(joint_frame(frame_p, frame_d), pilots, combiner,
                                      RalsConfig(), rng)
        symbol_errors = np.any(qpsk_demodulate(x_d_hat) != data.bits, axis=-1)
        assert np.mean(symbol_errors) < 0.01

    def test_requires_data_columns(self, rng):
        _, pilots, _, combiner, frame_p, _ = _setup(rng, n_bs=8, k_u=2, n_rf=8, tau_p=4)
        with pytest.raises(ContractViolation, match="data columns"):
            estimate_rals_sb(frame_p, pilots, combiner, RalsConfig(beta_u=1e-3, beta_v=1e-3), rng)


# ============================================================================
# WD-SB
# ============================================================================


class TestWdSb:

    def test_config_needs_data_for_estimated_whitening(self):
        with pytest.raises(ValidationError, match="n_data"):
            WdSbConfig(n_data=0, sigma2=0.1)

    def test_perfect_whitening_noiseless_exact(self, rng):
        h, pilots, _, combiner, frame_p, _ = _setup(rng)
        cfg = WdSbConfig(sigma2=0.0, whitening="perfect")
        estimate = estimate_wd_sb(frame_p, None, pilots, combiner, cfg, true_h=h)
        assert estimate.method is Method.WD_SB
        assert np.linalg.norm(estimate.h_hat - h) / np.linalg.norm(h) < 1e-9

    def test_perfect_whitening_needs_channel(self, rng):
        _, pilots, _, combiner, frame_p, _ = _setup(rng)
        with pytest.raises(ContractViolation, match="true channel"):
            estimate_wd_sb(frame_p, None, pilots, combiner, WdSbConfig(sigma2=0.1, whitening="perfect"))

    @pytest.mark.parametrize("seed", range(20))
    def test_procrustes_output_unitary(self, seed):
        rng = np.random.default_rng(seed)
        t_hat = procrustes_unitary(random_complex(rng, 16, 4), random_complex(rng, 16, 8),
                                   random_complex(rng, 8, 4))
        assert np.linalg.norm(t_hat @ t_hat.conj().T - np.eye(4)) < 1e-9

    def test_perfect_whitening_factor(self, rng):
        h = random_complex(rng, 12, 3)
        w = perfect_whitening(h)
        assert np.allclose(w @ w.conj().T, h @ h.conj().T)

    def test_whitening_matches_clamped_truncation(self, rng):
        z = random_complex(rng, 8, 50)
        w_hat, rank = estimate_whitening(z, 3, 0.2, 1.0)
        shifted = (z @ z.conj().T - 50 * 0.2 * np.eye(8)) / 50
        values, vectors = np.linalg.eigh(shifted)
        top = np.argsort(values)[::-1][:3]
        clamped = np.clip(values[top], 0, None)
        expected = (vectors[:, top] * clamped) @ vectors[:, top].conj().T
        assert np.allclose(w_hat @ w_hat.conj().T, expected, atol=1e-9)
        assert rank == int(np.count_nonzero(clamped > 0))

    def test_rank_deficiency_is_reported(self, rng):
        h = np.zeros((8, 2), dtype=complex)
        h[:, 0] = random_complex(rng, 8, 1)[:, 0]
        pilots = make_pilots(4, 2)
        combiner = make_rf_combiner(8, 8, 2, "unitary_validation")
        data = make_data(100, 2, 1.0, rng)
        frame_p = receive_pilots(h, pilots, combiner, 0.0, rng)
        frame_d = receive_data(h, data, combiner, 0.0, rng)
        estimate = estimate_wd_sb(frame_p, frame_d, pilots, combiner, WdSbConfig(n_data=100, sigma2=0.01))
        assert estimate.warnings and "rank 1" in estimate.warnings[0]
        assert np.all(np.isfinite(estimate.h_hat))

    def test_estimated_whitening_is_consistent(self):
        rng = make_rng(3)
        h, pilots, _, combiner, frame_p, frame_d = _setup(rng, n_data=20000)
        estimate = estimate_wd_sb(frame_p, frame_d, pilots, combiner, WdSbConfig(n_data=20000, sigma2=0.0))
        assert 10 * np.log10(nmse(estimate.h_hat, h)) < -15

    def test_beats_ml_with_perfect_whitening(self):
        gaps = []
        for trial in range(100):
            rng = make_rng(17, trial)
            h, pilots, _, combiner, frame_p, _ = _setup(rng, n_bs=32, k_u=4, n_rf=8, sigma2=0.3)
            ml = nmse(estimate_ml(frame_p, pilots, combiner).h_hat, h)
            wd = nmse(estimate_wd_sb(frame_p, None, pilots, combiner,
                                     WdSbConfig(sigma2=0.3, whitening="perfect"), true_h=h).h_hat, h)
            gaps.append((ml, wd))
        ml_mean, wd_mean = np.mean(gaps, axis=0)
        assert wd_mean < ml_mean

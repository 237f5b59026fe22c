"""Tests for the linear-algebra wrappers and seeded streams."""

import math

import numpy as np
import pytest
import scipy.linalg

from src.core.errors import ContractViolation, DecompositionError, NumericalError
from src.core.numerics import (SeededRng, as_matrix, complex_gaussian, hermitian_eig, make_rng,
                               pinv, solve_hpd, svd)
from src.transceiver.frames import make_pilots
from tests.helpers import random_complex


# ============================================================================
# SVD
# ============================================================================


class TestSvd:

    @pytest.mark.parametrize("seed", range(20))
    def test_reconstruction_and_order(self, seed):
        rng = np.random.default_rng(seed)
        a = random_complex(rng, 12, 5)
        result = svd(a)
        assert np.linalg.norm(result.reconstruct() - a) <= 1e-10 * np.linalg.norm(a)
        assert np.all(np.diff(result.s) <= 0)
        assert np.allclose(result.u.conj().T @ result.u, np.eye(5), atol=1e-12)

    def test_phase_convention(self, rng):
        result = svd(random_complex(rng, 8, 4))
        idx = np.argmax(np.abs(result.u), axis=0)
        pivots = result.u[idx, np.arange(4)]
        assert np.allclose(pivots.imag, 0, atol=1e-12)
        assert np.all(pivots.real >= 0)

    def test_phase_convention_is_deterministic(self, rng):
        a = random_complex(rng, 6, 6)
        first, second = svd(a), svd(a * 1.0)
        assert np.allclose(first.u, second.u)

    def test_identity(self):
        result = svd(np.eye(3))
        assert np.allclose(result.s, 1.0)
        assert np.allclose(result.reconstruct(), np.eye(3))

    def test_rejects_nan(self):
        with pytest.raises(ContractViolation, match="NaN or Inf"):
            svd(np.array([[1.0, np.nan], [0.0, 1.0]]))

    def test_large_reconstruction(self):
        a = random_complex(np.random.default_rng(256), 256, 256)
        result = svd(a)
        assert np.linalg.norm(result.reconstruct() - a) <= 1e-10 * np.linalg.norm(a)
        assert np.allclose(result.u.conj().T @ result.u, np.eye(256), atol=1e-10)

    def test_failure_carries_residual(self, monkeypatch):
        def diverge(*args, **kwargs):
            raise np.linalg.LinAlgError("SVD did not converge")
        monkeypatch.setattr(scipy.linalg, "svd", diverge)
        with pytest.raises(DecompositionError, match="residual=inf") as excinfo:
            svd(np.eye(3))
        assert math.isinf(excinfo.value.residual)


# ============================================================================
# HERMITIAN EIGENDECOMPOSITION
# ============================================================================


class TestHermitianEig:

    def test_descending_and_reconstructs(self, rng):
        b = random_complex(rng, 6, 6)
        a = b @ b.conj().T
        w, q = hermitian_eig(a)
        assert np.all(np.diff(w) <= 0)
        assert np.allclose((q * w) @ q.conj().T, a, atol=1e-10)

    def test_diagonal(self):
        w, _ = hermitian_eig(np.diag([1.0, 3.0, 2.0]))
        assert np.allclose(w, [3.0, 2.0, 1.0])

    def test_rejects_non_hermitian(self):
        with pytest.raises(ContractViolation, match="not Hermitian"):
            hermitian_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_tolerates_rounding_asymmetry(self, rng):
        b = random_complex(rng, 4, 4)
        a = b @ b.conj().T
        a[0, 1] += 1e-12
        w, _ = hermitian_eig(a)
        assert np.all(np.isfinite(w))

    @pytest.mark.parametrize("rank", [1, 3, 5])
    def test_rank_of_outer_product(self, rng, rank):
        w_mat = random_complex(rng, 8, rank)
        w, _ = hermitian_eig(w_mat @ w_mat.conj().T)
        assert np.sum(w > 1e-10 * w[0]) == rank
        assert np.all(np.abs(w[rank:]) <= 1e-10 * w[0])

    def test_failure_carries_residual(self, monkeypatch):
        def diverge(*args, **kwargs):
            raise np.linalg.LinAlgError("eigh did not converge")
        monkeypatch.setattr(scipy.linalg, "eigh", diverge)
        with pytest.raises(DecompositionError) as excinfo:
            hermitian_eig(np.eye(3))
        assert math.isinf(excinfo.value.residual)



# ============================================================================
# PSEUDO-INVERSE AND HPD SOLVE
# ============================================================================


class TestPinv:

    def test_penrose_conditions(self):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            rows, cols = rng.integers(3, 10, size=2)
            rank = int(rng.integers(1, min(rows, cols)))
            a = random_complex(rng, rows, rank) @ random_complex(rng, rank, cols)
            p = pinv(a)
            tol = 1e-10 * np.linalg.norm(a) * np.linalg.norm(p)
            assert np.linalg.norm(a @ p @ a - a) <= tol * np.linalg.norm(a)
            assert np.linalg.norm(p @ a @ p - p) <= tol * np.linalg.norm(p)
            assert np.linalg.norm((a @ p).conj().T - a @ p) <= tol
            assert np.linalg.norm((p @ a).conj().T - p @ a) <= tol

    @pytest.mark.parametrize("tau_p,k_u,p_p", [(16, 12, 1.0), (8, 8, 2.5), (5, 2, 0.5)])
    def test_orthogonal_pilots_closed_form(self, tau_p, k_u, p_p):
        x_p = make_pilots(tau_p, k_u, p_p).x_p
        assert np.allclose(pinv(x_p), x_p.conj().T / (p_p * tau_p), atol=1e-12)

    def test_zero_matrix(self):
        assert np.array_equal(pinv(np.zeros((3, 2))), np.zeros((2, 3)))

    def test_rank_deficient(self):
        a = np.outer([1.0, 2.0, 3.0], [1.0, 1.0])
        p = pinv(a)
        assert np.allclose(a @ p @ a, a)

    @pytest.mark.parametrize("rcond", [0.0, 1.0, -1e-3])
    def test_rcond_range(self, rcond):
        with pytest.raises(ContractViolation, match="rcond"):
            pinv(np.eye(2), rcond=rcond)


class TestSolveHpd:

    def test_solves(self, rng):
        b = random_complex(rng, 5, 5)
        a = b @ b.conj().T + np.eye(5)
        rhs = random_complex(rng, 5, 2)
        x = solve_hpd(a, rhs)
        assert np.allclose(a @ x, rhs, atol=1e-10)

    def test_indefinite_reports_minor(self):
        with pytest.raises(NumericalError) as excinfo:
            solve_hpd(np.diag([1.0, -1.0, 2.0]), np.ones(3))
        assert excinfo.value.minor_index == 2

    def test_shape_mismatch(self):
        with pytest.raises(ContractViolation, match="incompatible"):
            solve_hpd(np.eye(3), np.ones(2))


# ============================================================================
# RANDOM STREAMS
# ============================================================================


class TestRandomStreams:

    def test_same_key_same_draws(self):
        a = make_rng(7, 1, 2).standard_normal(5)
        b = make_rng(7, 1, 2).standard_normal(5)
        assert np.array_equal(a, b)

    def test_distinct_keys_differ(self):
        a = make_rng(7, 1, 2).standard_normal(5)
        b = make_rng(7, 2, 1).standard_normal(5)
        assert not np.array_equal(a, b)

    def test_seeded_rng_matches_make_rng(self):
        a = SeededRng(3, (0, 4)).generator().integers(0, 1000, 8)
        b = make_rng(3, 0, 4).integers(0, 1000, 8)
        assert np.array_equal(a, b)

    def test_complex_gaussian_power(self):
        samples = complex_gaussian(make_rng(0), 200, 200, variance=0.5)
        assert abs(np.mean(np.abs(samples) ** 2) - 0.5) < 0.01
        assert abs(np.mean(samples.real ** 2) - 0.25) < 0.01

    def test_complex_gaussian_rejects_negative_variance(self):
        with pytest.raises(ContractViolation, match="variance"):
            complex_gaussian(make_rng(0), 2, 2, variance=-1)

    def test_zero_variance(self):
        assert np.array_equal(complex_gaussian(make_rng(3), 4, 5, 0.0), np.zeros((4, 5)))

    def test_sample_moments(self):
        z = complex_gaussian(make_rng(5), 1000, 1000, 0.5)
        assert abs(np.mean(z)) < 0.005
        assert np.mean(np.abs(z) ** 2) == pytest.approx(0.5, rel=0.01)
        assert np.mean(z.real ** 2) == pytest.approx(0.25, rel=0.02)
        assert np.mean(z.imag ** 2) == pytest.approx(0.25, rel=0.02)



def test_as_matrix_rejects_vectors():
    with pytest.raises(ContractViolation, match="2-D"):
        as_matrix(np.ones(3))

#!/usr/bin/env python3
"""
Dense Complex Linear Algebra and Seeded Sampling
================================================

Thin, convention-fixing wrappers around numpy/scipy decompositions used by
every other module. The wrappers pin down the details the math leaves open:
singular-vector phases, eigenvalue ordering, pseudo-inverse truncation and
reproducible random streams.

Usage:
    from src.core.numerics import svd, hermitian_eig, pinv, solve_hpd, make_rng

    rng = make_rng(42, 0, 3)          # seed 42, sweep 0, trial 3
    noise = complex_gaussian(rng, 16, 8, variance=0.1)
    result = svd(noise)
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from src.core.errors import ContractViolation, DecompositionError, NumericalError

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-8
DEFAULT_RCOND = 1e-12


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD with a deterministic phase convention"""
    u: np.ndarray
    s: np.ndarray
    vh: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.vh


@dataclass(frozen=True)
class SeededRng:
    """A (seed, stream) pair naming one reproducible random stream"""
    seed: int
    stream: Tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.seed, spawn_key=tuple(self.stream))
        return np.random.default_rng(sequence)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for the stream keyed by ``stream`` under ``seed``.

    Streams with distinct keys are statistically independent, and the same
    key always yields the same draws no matter which process asks for it.
    """
    return SeededRng(int(seed), tuple(int(s) for s in stream)).generator()


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate a 2-D finite array and return it as complex128."""
    try:
        arr = np.asarray_chkfinite(a)
    except ValueError as e:
        raise ContractViolation(f"{name} contains NaN or Inf") from e
    if arr.ndim != 2:
        raise ContractViolation(f"{name} must be 2-D, got ndim={arr.ndim}")
    return arr.astype(np.complex128, copy=False)


def _fix_phases(u: np.ndarray, vh: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # largest-magnitude entry of each left vector made real nonnegative
    if u.size == 0:
        return u, vh
    idx = np.argmax(np.abs(u), axis=0)
    pivots = u[idx, np.arange(u.shape[1])]
    mags = np.abs(pivots)
    phases = np.ones_like(pivots)
    nz = mags > 0
    phases[nz] = pivots[nz] / mags[nz]
    return u * phases.conj(), vh * phases[:, None]


def svd(a) -> SvdResult:
    """Thin SVD ``a = u @ diag(s) @ vh`` with singular values descending.

    Each left singular vector is rotated so its largest-magnitude entry is
    real and nonnegative; ``vh`` absorbs the conjugate phase so the product
    is unchanged.
    """
    arr = as_matrix(a, "svd input")
    try:
        u, s, vh = scipy.linalg.svd(arr, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        logger.debug("gesdd failed to converge, retrying with gesvd")
        try:
            u, s, vh = scipy.linalg.svd(arr, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as e:
            # neither driver produced a factorization to measure
            raise DecompositionError("SVD did not converge with gesdd or gesvd",
                                     residual=math.inf) from e
    u, vh = _fix_phases(u, vh)
    return SvdResult(u=u, s=s, vh=vh)


def hermitian_eig(a) -> Tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Inputs within HERMITIAN_TOL of Hermitian are symmetrized first.

    Returns:
        (eigenvalues, eigenvectors) with eigenvectors as columns
    """
    arr = as_matrix(a, "hermitian_eig input")
    if arr.shape[0] != arr.shape[1]:
        raise ContractViolation(f"hermitian_eig needs a square matrix, got {arr.shape}")
    scale = max(1.0, float(np.linalg.norm(arr)))
    asym = float(np.linalg.norm(arr - arr.conj().T))
    if asym > HERMITIAN_TOL * scale:
        raise ContractViolation(f"matrix is not Hermitian (‖A − Aᴴ‖ = {asym:.3e})")
    sym = (arr + arr.conj().T) / 2
    try:
        w, q = scipy.linalg.eigh(sym)
    except np.linalg.LinAlgError:
        logger.debug("eigh failed to converge, retrying with the QR driver")
        try:
            w, q = scipy.linalg.eigh(sym, driver="ev")
        except np.linalg.LinAlgError as e:
            raise DecompositionError("Hermitian eigendecomposition did not converge",
                                     residual=math.inf) from e
    # eigh is ascending; a stable reversal keeps ties in original order
    order = np.argsort(-w, kind="stable")
    return w[order], q[:, order]


def pinv(a, rcond: float = DEFAULT_RCOND) -> np.ndarray:
    """Moore-Penrose pseudo-inverse through the SVD.

    Singular values below ``rcond * s_max`` are treated as zero.
    """
    if not 0 < rcond < 1:
        raise ContractViolation(f"rcond must lie in (0, 1), got {rcond}")
    result = svd(a)
    if result.s.size == 0 or result.s[0] == 0:
        return np.zeros((result.vh.shape[1], result.u.shape[0]), dtype=np.complex128)
    keep = result.s > rcond * result.s[0]
    inv_s = np.zeros_like(result.s)
    inv_s[keep] = 1.0 / result.s[keep]
    return (result.vh.conj().T * inv_s) @ result.u.conj().T


def solve_hpd(a, b) -> np.ndarray:
    """Solve ``a @ x = b`` for Hermitian positive definite ``a`` via Cholesky."""
    arr = as_matrix(a, "solve_hpd matrix")
    rhs = np.asarray(b, dtype=np.complex128)
    if arr.shape[0] != arr.shape[1] or arr.shape[0] != rhs.shape[0]:
        raise ContractViolation(f"incompatible shapes {arr.shape} and {rhs.shape}")
    potrf, = lapack.get_lapack_funcs(("potrf",), (arr,))
    factor, info = potrf((arr + arr.conj().T) / 2, lower=False, clean=True)
    if info > 0:
        raise NumericalError("matrix is not positive definite", minor_index=int(info))
    if info < 0:
        raise ContractViolation(f"potrf rejected argument {-info}")
    return scipy.linalg.cho_solve((factor, False), rhs)


def complex_gaussian(rng: np.random.Generator, rows: int, cols: int,
                     variance: float = 1.0) -> np.ndarray:
    """Circularly symmetric CN(0, variance) samples, half the power per part."""
    if variance < 0:
        raise ContractViolation(f"variance must be nonnegative, got {variance}")
    scale = np.sqrt(variance / 2.0)
    real = rng.standard_normal((rows, cols))
    imag = rng.standard_normal((rows, cols))
    return scale * (real + 1j * imag)

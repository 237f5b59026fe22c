"""Small random-matrix helpers shared by the tests."""

import numpy as np


def random_complex(rng, rows, cols):
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_unitary(rng, k):
    q, r = np.linalg.qr(random_complex(rng, k, k))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def spaced_support(rng, n_atoms, size, min_gap=3):
    """Random atom subset whose indices are at least min_gap apart."""
    while True:
        support = np.sort(rng.choice(n_atoms, size=size, replace=False))
        if np.all(np.diff(support) >= min_gap):
            return support

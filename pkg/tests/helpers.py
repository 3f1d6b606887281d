"""Shared construction helpers for the test suite."""

from __future__ import annotations

import numpy as np

from covcast.spd import HermitianTangent, SPDMatrix


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_spd(
    rng: np.random.Generator, n: int, eig_range: tuple[float, float] = (0.1, 10.0)
) -> SPDMatrix:
    """Random HPD matrix with eigenvalues log-uniform in ``eig_range``."""
    u = random_unitary(rng, n)
    lo, hi = eig_range
    w = np.exp(rng.uniform(np.log(lo), np.log(hi), size=n))
    m = (u * w) @ u.conj().T
    return SPDMatrix((m + m.conj().T) / 2)


def random_hermitian(
    rng: np.random.Generator, n: int, scale: float = 1.0
) -> HermitianTangent:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return HermitianTangent(scale * (a + a.conj().T) / 2)


def random_invertible(rng: np.random.Generator, n: int) -> np.ndarray:
    """Well-conditioned random complex matrix (unit-scale singular values)."""
    u = random_unitary(rng, n)
    v = random_unitary(rng, n)
    s = rng.uniform(0.5, 2.0, size=n)
    return (u * s) @ v.conj().T


def frob(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, "fro"))

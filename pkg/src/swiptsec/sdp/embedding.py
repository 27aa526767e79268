"""Real symmetric embedding of complex Hermitian matrices."""
from __future__ import annotations

import numpy as np

from .program import DomainError, hermitian_residual


def embed_hermitian(A, tol: float = 1e-9) -> np.ndarray:
    """Return ``[[Re A, -Im A], [Im A, Re A]]``.

    The embedding has every eigenvalue of ``A`` twice, so ``Tr`` doubles and
    PSD-ness is preserved in both directions.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {A.shape}")
    if hermitian_residual(A) > tol:
        raise DomainError("matrix is not Hermitian")
    re, im = A.real, A.imag
    return np.block([[re, -im], [im, re]])


def unembed(Z: np.ndarray) -> np.ndarray:
    """Project a real ``2n x 2n`` symmetric matrix back to an ``n x n`` Hermitian one.

    Exact inverse of :func:`embed_hermitian` on its range; for a general
    symmetric ``Z`` this is the orthogonal projection onto that range, which
    maps PSD matrices to PSD matrices.
    """
    n = Z.shape[0] // 2
    re = 0.5 * (Z[:n, :n] + Z[n:, n:])
    im = 0.5 * (Z[n:, :n] - Z[:n, n:])
    X = re + 1j * im
    return 0.5 * (X + X.conj().T)

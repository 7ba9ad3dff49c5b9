"""Explicit matrices: counterexample Gram families, the tightness example, C_K.

Counterexamples are specified through their Gram matrix ``A'A`` and then
factorized, so only Gram-level quantities (inner products, projections,
RIP constants) are meaningful; the factor is unique only up to an
orthogonal transform on the left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from olslab.core import OlsLabError, SensingMatrix, SparseSignal

SYMMETRY_TOL = 1e-14
PSD_TOL = 1e-12


class NotFactorizableError(OlsLabError):
    pass


@dataclass(frozen=True)
class GramSpec:
    """Symmetric matrix with unit diagonal, the Gram matrix of unit-norm columns."""

    entries: np.ndarray

    def __post_init__(self):
        G = np.array(self.entries, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] < 1:
            raise OlsLabError(f"Gram matrix must be square, got shape {G.shape}")
        if not np.all(np.isfinite(G)):
            raise OlsLabError("Gram matrix has non-finite entries")
        if np.max(np.abs(G - G.T)) > SYMMETRY_TOL:
            raise OlsLabError("Gram matrix is not symmetric")
        if np.any(np.diag(G) != 1.0):
            raise OlsLabError("Gram matrix diagonal must be exactly 1")
        G.setflags(write=False)
        object.__setattr__(self, "entries", G)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])

    @property
    def is_psd(self) -> bool:
        return self.min_eigenvalue >= -PSD_TOL


def gram_to_matrix(G: GramSpec) -> SensingMatrix:
    """A real matrix ``A`` with ``A'A = G``.

    Nonsingular ``G`` gets its symmetric square root. Singular ``G`` gets
    ``diag(sqrt(w)) U'`` restricted to the nonzero eigenvalues, which has
    ``rank(G)`` rows.
    """
    w, U = np.linalg.eigh(G.entries)
    if w[0] < -PSD_TOL:
        raise NotFactorizableError(
            f"Gram matrix has eigenvalue {w[0]!r} < 0; no real factor exists"
        )
    w = np.clip(w, 0.0, None)
    keep = w > PSD_TOL * max(1.0, w[-1])
    if keep.all():
        A = (U * np.sqrt(w)) @ U.T
    else:
        A = np.sqrt(w[keep])[:, None] * U[:, keep].T
    return SensingMatrix(A)


def compute_CK(K: int) -> float:
    """Sharp RIP threshold below which K-iteration OLS always recovers K-sparse signals."""
    if K < 1:
        raise OlsLabError(f"K must be a positive integer, got {K}")
    if K == 2:
        return 1.0 / math.sqrt(K + 0.25)
    if K == 3:
        return 1.0 / math.sqrt(K + 0.0625)
    return 1.0 / math.sqrt(K)


def counterexample_gram(K: int, delta_star: float) -> GramSpec:
    """Gram matrix of the ``(K+1)``-column failure instance with ``delta_{K+1} = delta_star``."""
    if K < 2:
        raise OlsLabError("no failing instance exists for K = 1 (C_1 = 1)")
    if not 0.0 < delta_star < 1.0:
        raise OlsLabError(f"delta_star must lie in (0, 1), got {delta_star!r}")
    d = float(delta_star)
    G = np.eye(K + 1)
    if K == 2:
        G[0, 1:] = G[1:, 0] = d / 2
        G[1, 2] = G[2, 1] = -d / 2
    elif K == 3:
        G[0, 1:] = G[1:, 0] = d / 2
        inner = np.full((3, 3), -d / 8)
        np.fill_diagonal(inner, 1.0)
        G[1:, 1:] = inner
    else:
        G[0, 1:] = G[1:, 0] = d / math.sqrt(K)
    spec = GramSpec(G)
    if not spec.is_psd:
        raise NotFactorizableError(
            f"counterexample Gram for K={K}, delta*={d!r} is not PSD "
            f"(min eigenvalue {spec.min_eigenvalue!r})"
        )
    return spec


def counterexample(K: int, delta_star: float) -> tuple[SensingMatrix, SparseSignal]:
    """Unit-column matrix and all-ones signal on ``{2, ..., K+1}`` where OLS picks column 1 first
    whenever ``delta_star >= C_K``."""
    A = gram_to_matrix(counterexample_gram(K, delta_star))
    x = SparseSignal(np.concatenate([[0.0], np.ones(K)]))
    return A, x


def tightness_example(K: int) -> tuple[SensingMatrix, SparseSignal]:
    """The ``(K+1) x (K+1)`` instance on which the off-support bound holds with equality at ``k = 0``.

    For ``K = 1`` the first column coincides with the second, so the matrix
    fails the RIP of order 2.
    """
    if K < 1:
        raise OlsLabError(f"K must be a positive integer, got {K}")
    A = np.zeros((K + 1, K + 1))
    A[0, 0] = math.sqrt((K - 1) / K)
    A[1:, 0] = 1.0 / K
    A[1:, 1:] = np.eye(K)
    x = SparseSignal(np.concatenate([[0.0], np.ones(K)]))
    return SensingMatrix(A), x

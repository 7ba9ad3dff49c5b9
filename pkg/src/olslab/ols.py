"""Orthogonal least squares with exact, traced iterations.

Each iteration identifies one new column, augments the support, re-fits
all coefficients on it by least squares, and updates the residual. Two
identification rules are available:

``projection``
    pick ``i`` minimizing ``||P^perp_{S + i} y||^2``, refactorizing
    ``A_{S + i}`` for every candidate;
``ratio``
    pick ``j`` maximizing ``|<r, a_j>| / ||P^perp_S a_j||``.

They select the same index whenever scores are not tied. Ties within
``TIE_RTOL * (1 + max|score|)`` go to the smallest index.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from olslab.core import (
    OlsLabError,
    OlsTrace,
    IterationRecord,
    RankDeficientError,
    SensingMatrix,
    SparseSignal,
    SupportSet,
    validate_sensing_matrix,
)

RANK_RTOL = 1e-10
TIE_RTOL = 1e-9
ZERO_RESIDUAL = 1e-12
DEGENERATE_COLUMN = 1e-10

RULES = ("projection", "ratio")


def _orthonormal_basis(A: SensingMatrix, J: SupportSet) -> tuple[np.ndarray, np.ndarray]:
    """Reduced QR of ``A_J``; raises :class:`RankDeficientError` if ``A_J`` is rank deficient."""
    M = A.submatrix(J)
    if M.shape[1] == 0:
        return np.zeros((A.rows, 0)), np.zeros((0, 0))
    if not _full_rank(M):
        raise RankDeficientError(
            f"columns {list(J)} are linearly dependent (first dependent prefix ends at "
            f"{_first_dependent(A, J)})",
            columns=tuple(J),
        )
    Q, R = np.linalg.qr(M)
    return Q, R


def _full_rank(M: np.ndarray) -> bool:
    if M.shape[1] > M.shape[0]:
        return False
    s = np.linalg.svd(M, compute_uv=False)
    return bool(s[-1] > RANK_RTOL * s[0])


def _first_dependent(A: SensingMatrix, J: SupportSet) -> int:
    idx = list(J)
    for end in range(1, len(idx) + 1):
        if not _full_rank(A.submatrix(SupportSet(tuple(idx[:end])))):
            return idx[end - 1]
    return idx[-1]


def _check_vector(A: SensingMatrix, v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (A.rows,):
        raise OlsLabError(f"{name} has shape {v.shape}, expected ({A.rows},)")
    return v


def project_complement(A: SensingMatrix, J: SupportSet, v) -> np.ndarray:
    """Remove from ``v`` its orthogonal projection onto ``span(A_J)``."""
    v = _check_vector(A, v, "v")
    Q, _ = _orthonormal_basis(A, J)
    return v - Q @ (Q.T @ v)


def pick_index(scores: np.ndarray, maximize: bool) -> int:
    """1-based index of the best finite score, smallest index among ties."""
    finite = ~np.isnan(scores)
    if not finite.any():
        raise OlsLabError("no candidate indices left")
    vals = scores[finite]
    best = vals.max() if maximize else vals.min()
    tol = TIE_RTOL * (1.0 + np.abs(vals).max())
    tied = finite & (np.abs(np.where(finite, scores, best) - best) <= tol)
    return int(np.flatnonzero(tied)[0]) + 1


def projection_scores(A: SensingMatrix, y, S_prev: SupportSet) -> np.ndarray:
    y = _check_vector(A, y, "y")
    current = project_complement(A, S_prev, y)
    current_sq = float(current @ current)
    scores = np.full(A.cols, np.nan)
    for i in range(1, A.cols + 1):
        if i in S_prev:
            continue
        try:
            r = project_complement(A, S_prev.add(i), y)
        except RankDeficientError:
            # a dependent column cannot lower the residual
            scores[i - 1] = current_sq
        else:
            scores[i - 1] = float(r @ r)
    return scores


def identify_projection(A: SensingMatrix, y, S_prev: SupportSet) -> tuple[int, np.ndarray]:
    """Select the candidate minimizing the post-projection residual energy.

    Returns the chosen 1-based index and the score vector (NaN for columns
    already in ``S_prev``).
    """
    if len(S_prev) >= min(A.rows, A.cols):
        raise OlsLabError(f"|S_prev| = {len(S_prev)} leaves no room for another column")
    scores = projection_scores(A, y, S_prev)
    return pick_index(scores, maximize=False), scores


def complement_column_norms(A: SensingMatrix, S_prev: SupportSet) -> np.ndarray:
    Q, _ = _orthonormal_basis(A, S_prev)
    P = A.entries - Q @ (Q.T @ A.entries)
    return np.linalg.norm(P, axis=0)


def ratio_scores(A: SensingMatrix, r_prev, S_prev: SupportSet) -> np.ndarray:
    r_prev = _check_vector(A, r_prev, "r_prev")
    denom = complement_column_norms(A, S_prev)
    numer = np.abs(A.entries.T @ r_prev)
    scores = np.zeros(A.cols)
    ok = denom > DEGENERATE_COLUMN
    scores[ok] = numer[ok] / denom[ok]
    scores[S_prev.positions()] = np.nan
    return scores


def identify_ratio(A: SensingMatrix, r_prev, S_prev: SupportSet) -> tuple[int, np.ndarray]:
    """Select the candidate maximizing ``|<r, a_j>| / ||P^perp_S a_j||``.

    Columns lying in ``span(A_S)`` (complement norm below 1e-10) score 0.
    """
    scores = ratio_scores(A, r_prev, S_prev)
    return pick_index(scores, maximize=True), scores


def least_squares_on_support(A: SensingMatrix, y, S: SupportSet) -> SparseSignal:
    """Least-squares fit of ``y`` using only the columns in ``S``."""
    y = _check_vector(A, y, "y")
    values = np.zeros(A.cols)
    if len(S):
        Q, R = _orthonormal_basis(A, S)
        values[S.positions()] = solve_triangular(R, Q.T @ y)
    return SparseSignal(values)


def _degenerate_pick(A: SensingMatrix, S_prev: SupportSet) -> int:
    norms = complement_column_norms(A, S_prev)
    for i in range(1, A.cols + 1):
        if i not in S_prev and norms[i - 1] > DEGENERATE_COLUMN:
            return i
    raise RankDeficientError(
        f"every column outside {list(S_prev)} lies in its span; cannot extend support",
        columns=tuple(S_prev),
    )


def run_ols(A: SensingMatrix, y, K: int, rule: str = "projection") -> OlsTrace:
    """Run exactly ``K`` OLS iterations on ``y``.

    If the residual vanishes before ``K`` selections, the remaining
    iterations still run: each picks the smallest unselected index whose
    column is independent of the current support, and the record is
    flagged ``degenerate``.
    """
    if rule not in RULES:
        raise OlsLabError(f"unknown rule {rule!r}; expected one of {RULES}")
    if not 1 <= K <= min(A.rows, A.cols):
        raise OlsLabError(f"sparsity K={K} must lie in 1..{min(A.rows, A.cols)}")
    problems = validate_sensing_matrix(A)
    if problems:
        raise OlsLabError("; ".join(problems))
    y = _check_vector(A, y, "y")

    S = SupportSet()
    r = y.copy()
    records = []
    estimate = SparseSignal(np.zeros(A.cols))
    for k in range(1, K + 1):
        if rule == "projection":
            chosen, scores = identify_projection(A, y, S)
        else:
            chosen, scores = identify_ratio(A, r, S)
        degenerate = bool(np.linalg.norm(r) <= ZERO_RESIDUAL)
        if degenerate:
            chosen = _degenerate_pick(A, S)
        S = S.add(chosen)
        estimate = least_squares_on_support(A, y, S)
        r = y - A.entries @ estimate.values
        records.append(
            IterationRecord(
                k=k,
                scores=tuple(float(s) for s in scores),
                chosen_index=chosen,
                residual_norm=float(np.linalg.norm(r)),
                estimated_support=S,
                degenerate=degenerate,
            )
        )
    trace = OlsTrace(rule, float(np.linalg.norm(y)), tuple(records), estimate)
    trace.check_invariants()
    return trace

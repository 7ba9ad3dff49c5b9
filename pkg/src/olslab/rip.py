"""Exact restricted isometry constants by subset enumeration.

``delta_s`` is the largest deviation from 1 of any eigenvalue of any
``s x s`` principal submatrix of the Gram matrix ``A'A``. Every subset is
visited in lexicographic order; work is split into fixed-size chunks so the
result (including the witness subset) does not depend on how many workers
process the chunks.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from olslab.core import (
    InvariantViolation,
    OlsLabError,
    RipEstimate,
    SensingMatrix,
    SparseSignal,
    SupportSet,
    restrict_signal,
)
from olslab.ols import project_complement

ENUMERATION_CAP = 10**6
CHUNK_SIZE = 4096
MONOTONE_TOL = 1e-12


def _chunk_extremes(gram: np.ndarray, subsets: np.ndarray):
    """Per-chunk (deviation, lambda_min, lambda_max, witness row) with the first maximizer."""
    blocks = gram[subsets[:, :, None], subsets[:, None, :]]
    eig = np.linalg.eigvalsh(blocks)
    lo, hi = eig[:, 0], eig[:, -1]
    dev = np.maximum(hi - 1.0, 1.0 - lo)
    best = int(np.argmax(dev))
    return float(dev[best]), float(lo.min()), float(hi.max()), subsets[best]


def exact_rip_constant(
    A: SensingMatrix,
    order: int,
    *,
    cap: int = ENUMERATION_CAP,
    workers: int = 1,
) -> RipEstimate:
    """Exact ``delta_order`` of ``A`` with the subset that attains it.

    Orders above the row count are allowed and come out RIP-violated
    (``delta >= 1``), since those Gram blocks are singular.
    """
    n = A.cols
    if not 1 <= order <= n:
        raise OlsLabError(f"order {order} must lie in 1..{n}")
    total = math.comb(n, order)
    if total > cap:
        raise OlsLabError(
            f"C({n}, {order}) = {total} subsets exceeds the enumeration cap {cap}; "
            "use a smaller instance"
        )
    gram = A.gram()
    combos = itertools.combinations(range(n), order)
    chunks = []
    while True:
        block = list(itertools.islice(combos, CHUNK_SIZE))
        if not block:
            break
        chunks.append(np.array(block, dtype=np.intp))

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _chunk_extremes(gram, c), chunks))
    else:
        parts = [_chunk_extremes(gram, c) for c in chunks]

    # chunks are in lexicographic order, so a strict > keeps the first witness
    delta, witness = -np.inf, None
    for dev, _, _, sub in parts:
        if dev > delta:
            delta, witness = dev, sub
    lam_min = min(p[1] for p in parts)
    lam_max = max(p[2] for p in parts)
    return RipEstimate(
        order=order,
        delta=max(float(delta), 0.0),
        lambda_min=lam_min,
        lambda_max=lam_max,
        witness_subset=SupportSet(tuple(int(i) + 1 for i in witness)),
    )


def witness_vector(A: SensingMatrix, estimate: RipEstimate) -> np.ndarray:
    """Unit vector supported on the witness subset with ``|‖Ax‖² - 1| = delta``."""
    T = estimate.witness_subset
    block = A.submatrix(T)
    eig, vecs = np.linalg.eigh(block.T @ block)
    pick = 0 if 1.0 - eig[0] >= eig[-1] - 1.0 else -1
    x = np.zeros(A.cols)
    x[T.positions()] = vecs[:, pick]
    return x


def rip_definition_spot_check(
    A: SensingMatrix, estimate: RipEstimate, trials: int, rng_seed: int
) -> float:
    """Largest amount by which a random sparse unit vector escapes ``[1-delta, 1+delta]``.

    Non-positive when the certificate is consistent with the definition.
    """
    rng = np.random.default_rng(rng_seed)
    s, n = estimate.order, A.cols
    worst = -np.inf
    for _ in range(trials):
        pos = rng.choice(n, size=s, replace=False)
        coef = rng.standard_normal(s)
        coef /= np.linalg.norm(coef)
        energy = float(np.sum((A.entries[:, pos] @ coef) ** 2))
        excess = max(energy - (1.0 + estimate.delta), (1.0 - estimate.delta) - energy)
        worst = max(worst, excess)
    return float(worst)


def modified_rip_check(
    A: SensingMatrix,
    x: SparseSignal,
    J: SupportSet,
    *,
    delta: float | None = None,
) -> tuple[float, float]:
    """Slacks of the projected-RIP sandwich for ``x`` after removing ``span(A_J)``.

    Returns ``(middle - lower, upper - middle)`` where the middle term is
    ``||P^perp_J A x||^2`` and the bounds are ``(1 -/+ delta_{|S u J|})
    ||x_{S \\ J}||^2``. Both are ``>= -1e-9`` whenever the sandwich holds.
    Pass ``delta`` to skip recomputing ``delta_{|S u J|}``.
    """
    S = x.support
    union = S.union(J)
    if delta is None:
        if len(union) == 0:
            delta = 0.0
        else:
            est = exact_rip_constant(A, len(union))
            if est.rip_violated:
                raise OlsLabError(
                    f"delta_{len(union)} = {est.delta!r} >= 1: RIP of order {len(union)} fails"
                )
            delta = est.delta
    middle = project_complement(A, J, A.measure(x))
    middle_sq = float(middle @ middle)
    rest = restrict_signal(x, S.difference(J))
    rest_sq = float(rest @ rest)
    return middle_sq - (1.0 - delta) * rest_sq, (1.0 + delta) * rest_sq - middle_sq


def monotonicity_audit(A: SensingMatrix, max_order: int, *, workers: int = 1) -> list[float]:
    """``[delta_1, ..., delta_max_order]``; raises if the sequence ever decreases."""
    deltas = [exact_rip_constant(A, s, workers=workers).delta for s in range(1, max_order + 1)]
    for s in range(1, len(deltas)):
        if deltas[s] < deltas[s - 1] - MONOTONE_TOL:
            raise InvariantViolation(
                f"delta_{s + 1} = {deltas[s]!r} < delta_{s} = {deltas[s - 1]!r}"
            )
    return deltas

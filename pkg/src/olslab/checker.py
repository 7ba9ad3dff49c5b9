"""Numeric instantiation of the recovery analysis.

Every function evaluates both sides of one inequality on a concrete
instance ``(A, x, S_k)``, where ``S_k`` is a partial support assumed to
have been selected correctly so far and ``r = P^perp_{S_k} A x``. RIP
hypotheses are always checked with the exact oracle.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from olslab.constructions import compute_CK
from olslab.core import OlsLabError, SensingMatrix, SparseSignal, SupportSet, restrict_signal
from olslab.ols import pick_index, project_complement, ratio_scores, run_ols
from olslab.rip import exact_rip_constant

BOUND_TOL = 1e-9
TAIL_BOUND_DELTA_CAP = 0.5
# rounding guard for the non-strict delta <= 1/2 hypothesis
HYPOTHESIS_TOL = 1e-12


class HypothesisError(OlsLabError):
    """The recovery guarantee makes no claim for this matrix."""


@dataclass(frozen=True)
class _Instance:
    r: np.ndarray
    scores: np.ndarray  # ratio scores, NaN on S_k
    S: SupportSet
    tail_norm: float  # ||x_{S \ S_k}||
    K: int
    k: int


def _instance(A: SensingMatrix, x: SparseSignal, S_k: SupportSet, strict: bool) -> _Instance:
    S = x.support
    S_k.check_within(A.cols)
    if not S_k.issubset(S):
        raise OlsLabError(f"S_k = {S_k} is not contained in supp(x) = {S}")
    if strict and len(S_k) >= len(S):
        raise OlsLabError(f"S_k = {S_k} must be a proper subset of supp(x) = {S}")
    r = project_complement(A, S_k, A.measure(x))
    tail = restrict_signal(x, S.difference(S_k))
    return _Instance(r, ratio_scores(A, r, S_k), S, float(np.linalg.norm(tail)), len(S), len(S_k))


def _max_over(scores: np.ndarray, indices) -> float:
    vals = [scores[i - 1] for i in indices if not np.isnan(scores[i - 1])]
    return float(max(vals)) if vals else 0.0


def _off_support(n: int, S: SupportSet) -> list[int]:
    return [j for j in range(1, n + 1) if j not in S]


def _delta(A: SensingMatrix, K: int, delta: float | None) -> float:
    if delta is not None:
        return float(delta)
    if K + 1 > A.cols:
        raise OlsLabError(f"delta_{K + 1} needs at least {K + 1} columns, matrix has {A.cols}")
    return exact_rip_constant(A, K + 1).delta


@dataclass(frozen=True)
class SelectionMargin:
    lhs: float
    rhs: float
    correct: bool
    chosen_index: int


def selection_margin(A: SensingMatrix, x: SparseSignal, S_k: SupportSet) -> SelectionMargin:
    """Best in-support vs best off-support selection score after ``S_k``.

    ``correct`` is decided by the solver's own pick (smallest index among
    near-ties), so it agrees with :func:`run_ols` on boundary instances.
    """
    inst = _instance(A, x, S_k, strict=True)
    lhs = _max_over(inst.scores, inst.S.difference(S_k))
    rhs = _max_over(inst.scores, _off_support(A.cols, inst.S))
    chosen = pick_index(inst.scores, maximize=True)
    return SelectionMargin(lhs, rhs, chosen in inst.S, chosen)


@dataclass(frozen=True)
class BoundCheck:
    """Measured quantity against its bound; ``holds`` is None outside the hypothesis."""

    measured: float
    bound: float
    delta: float
    in_hypothesis: bool

    @property
    def holds(self) -> bool | None:
        if not self.in_hypothesis:
            return None
        return self.measured <= self.bound + BOUND_TOL


def lemma4_bound(
    A: SensingMatrix, x: SparseSignal, S_k: SupportSet, *, delta: float | None = None
) -> BoundCheck:
    """Off-support ratio maximum against ``delta_{K+1} ||r||^2 / ||x_{S \\ S_k}||``.

    The bound is claimed only when ``delta_{K+1} <= 1/2``; both sides are
    still returned otherwise, with ``in_hypothesis`` False.
    """
    inst = _instance(A, x, S_k, strict=True)
    d = _delta(A, inst.K, delta)
    measured = _max_over(inst.scores, _off_support(A.cols, inst.S))
    bound = d * float(inst.r @ inst.r) / inst.tail_norm
    return BoundCheck(measured, bound, d, d <= TAIL_BOUND_DELTA_CAP + HYPOTHESIS_TOL)


def support_side_lower_bound(
    A: SensingMatrix, x: SparseSignal, S_k: SupportSet
) -> tuple[float, float]:
    """``(support_max, ||r||^2 / (sqrt(K - k) ||x_{S \\ S_k}||))``; the first is never below the second."""
    inst = _instance(A, x, S_k, strict=True)
    support_max = _max_over(inst.scores, inst.S.difference(S_k))
    bound = float(inst.r @ inst.r) / (math.sqrt(inst.K - inst.k) * inst.tail_norm)
    return support_max, bound


@dataclass(frozen=True)
class Remark2Report:
    delta: float
    K: int
    k: int
    correlation_max: float  # max_{j not in S} |<r, a_j>|
    ratio_max: float  # same, divided by ||P^perp a_j||
    lemma4_bound: float
    new_bound: float  # ||r||^2 / (2 ||x_tail||)
    old_bound: float  # ||r||^2 / (sqrt(3) ||x_tail||)
    in_hypothesis: bool
    # second comparison: ratio bound with sqrt(|S \ S_k|) in the denominator
    sqrt_k_bound: float  # ||r||^2 / (sqrt(K) ||x_tail||)
    tail_count_bound: float  # ||r||^2 / (sqrt(K - k) ||x_tail||)
    part_ii_applicable: bool
    part_ii_in_stated_scope: bool

    @property
    def ratio(self) -> float:
        return self.old_bound / self.new_bound

    @property
    def chain_holds(self) -> bool | None:
        if not self.in_hypothesis:
            return None
        t = BOUND_TOL
        return (
            self.correlation_max <= self.ratio_max + t
            and self.ratio_max <= self.lemma4_bound + t
            and self.lemma4_bound <= self.new_bound + t
            and self.new_bound <= self.old_bound + t
        )

    @property
    def part_ii_holds(self) -> bool | None:
        if not self.part_ii_applicable:
            return None
        t = BOUND_TOL
        return (
            self.ratio_max <= self.lemma4_bound + t
            and self.lemma4_bound < self.sqrt_k_bound
            and self.sqrt_k_bound <= self.tail_count_bound + t
        )


def remark2_comparisons(
    A: SensingMatrix, x: SparseSignal, S_k: SupportSet, *, delta: float | None = None
) -> Remark2Report:
    """Compare the new off-support bound with the older ``1/sqrt(3)`` one.

    Under ``delta_{K+1} <= 1/2`` the chain ``correlation <= ratio <=
    delta ||r||^2/||x|| <= ||r||^2/(2||x||) <= ||r||^2/(sqrt(3)||x||)`` must
    hold. The second comparison needs ``delta_{K+1} < 1/sqrt(K)`` and is
    only asserted in the source for ``K >= 4``; it is evaluated for every
    ``K`` and labelled accordingly.
    """
    inst = _instance(A, x, S_k, strict=True)
    d = _delta(A, inst.K, delta)
    off = _off_support(A.cols, inst.S)
    r_sq = float(inst.r @ inst.r)
    corr = np.abs(A.entries.T @ inst.r)
    correlation_max = float(max((corr[j - 1] for j in off), default=0.0))
    applicable = d < 1.0 / math.sqrt(inst.K)
    return Remark2Report(
        delta=d,
        K=inst.K,
        k=inst.k,
        correlation_max=correlation_max,
        ratio_max=_max_over(inst.scores, off),
        lemma4_bound=d * r_sq / inst.tail_norm,
        new_bound=r_sq / (2.0 * inst.tail_norm),
        old_bound=r_sq / (math.sqrt(3.0) * inst.tail_norm),
        in_hypothesis=d <= TAIL_BOUND_DELTA_CAP + HYPOTHESIS_TOL,
        sqrt_k_bound=r_sq / (math.sqrt(inst.K) * inst.tail_norm),
        tail_count_bound=r_sq / (math.sqrt(inst.K - inst.k) * inst.tail_norm),
        part_ii_applicable=applicable,
        part_ii_in_stated_scope=applicable and inst.K >= 4,
    )


def adversarial_patterns(K: int) -> dict[str, np.ndarray]:
    """Coefficient patterns that stress tie-breaking: equal magnitudes and fast decay."""
    ones = np.ones(K)
    signs = np.where(np.arange(K) % 2 == 0, 1.0, -1.0)
    decay = 2.0 ** -np.arange(1, K + 1)
    return {
        "ones": ones,
        "alternating": signs,
        "decay": decay,
        "alternating_decay": signs * decay,
    }


@dataclass(frozen=True)
class Failure:
    trial: int
    kind: str
    support: tuple[int, ...]
    selected: tuple[int, ...]


@dataclass(frozen=True)
class Theorem1Report:
    K: int
    delta: float
    threshold: float
    runs: int
    rule: str
    failures: tuple[Failure, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "delta": self.delta,
            "threshold": self.threshold,
            "runs": self.runs,
            "rule": self.rule,
            "failures": [
                {"trial": f.trial, "kind": f.kind, "support": list(f.support), "selected": list(f.selected)}
                for f in self.failures
            ],
        }


def _trial_signal(n: int, K: int, rng_seed: int, trial: int, trials: int) -> tuple[str, SparseSignal]:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(rng_seed, spawn_key=(trial,))))
    support = np.sort(rng.choice(n, size=K, replace=False))
    patterns = adversarial_patterns(K)
    if trial < trials:
        if trial % 2 == 0:
            kind, coef = "gaussian", rng.standard_normal(K)
            # a draw this close to zero would shrink the support
            coef[np.abs(coef) < 1e-6] = 1e-6
        else:
            kind, coef = "rademacher", rng.choice([-1.0, 1.0], size=K)
    else:
        kind = list(patterns)[trial - trials]
        coef = patterns[kind]
    values = np.zeros(n)
    values[support] = coef
    return kind, SparseSignal(values)


def theorem1_verify(
    A: SensingMatrix,
    trials: int,
    K: int,
    rng_seed: int,
    *,
    rule: str = "projection",
    delta: float | None = None,
    workers: int = 1,
) -> Theorem1Report:
    """Run OLS on random and adversarial K-sparse signals; every run must recover exactly.

    Random signals alternate Gaussian and Rademacher coefficients on a
    uniform support; four structured patterns follow. Raises
    :class:`HypothesisError` unless ``delta_{K+1} < C_K``.
    """
    if trials < 1:
        raise OlsLabError("trials must be positive")
    d = _delta(A, K, delta)
    threshold = compute_CK(K)
    if not d < threshold:
        raise HypothesisError(
            f"certified delta_{K + 1} = {d!r} is not below C_{K} = {threshold!r}; "
            "recovery is not guaranteed (run a phase experiment instead)"
        )
    total = trials + len(adversarial_patterns(K))

    def one(trial: int):
        kind, x = _trial_signal(A.cols, K, rng_seed, trial, trials)
        trace = run_ols(A, A.measure(x), K, rule)
        if trace.recovered(x):
            return None
        return Failure(trial, kind, tuple(x.support), tuple(trace.selected))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one, range(total)))
    else:
        outcomes = [one(t) for t in range(total)]
    failures = tuple(sorted((f for f in outcomes if f), key=lambda f: f.trial))
    return Theorem1Report(K, d, threshold, total, rule, failures)


@dataclass(frozen=True)
class SelectionPath:
    """Selection-condition verdicts along the solver's own path."""

    verdicts: tuple[bool, ...]
    ols_recovered: bool

    @property
    def condition_holds(self) -> bool:
        return len(self.verdicts) == 0 or all(self.verdicts)

    @property
    def consistent(self) -> bool:
        return self.condition_holds == self.ols_recovered


def selection_path(A: SensingMatrix, x: SparseSignal, rule: str = "ratio") -> SelectionPath:
    """Evaluate the correct-selection condition at every partial support OLS actually reaches.

    Stops at the first wrong verdict, since later partial supports are no
    longer subsets of ``supp(x)``.
    """
    K = x.sparsity
    trace = run_ols(A, A.measure(x), K, rule)
    verdicts = []
    S_k = SupportSet()
    for rec in trace.iterations:
        margin = selection_margin(A, x, S_k)
        verdicts.append(margin.correct)
        if not margin.correct:
            break
        S_k = rec.estimated_support
        if not S_k.issubset(x.support):
            break
    return SelectionPath(tuple(verdicts), trace.recovered(x))

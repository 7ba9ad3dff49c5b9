"""Shared numerical data types: sensing matrices, sparse signals, supports.

Indices are 1-based everywhere in the public API (the ground set is
``{1, ..., n}``). Arrays are stored 0-based internally; use
:meth:`SupportSet.positions` to index numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

ZERO_THRESHOLD = 1e-12
DEFAULT_COLUMN_NORM_TOLERANCE = 1e-10


class OlsLabError(ValueError):
    """Invalid input or violated precondition."""


class RankDeficientError(OlsLabError):
    def __init__(self, message: str, columns: tuple[int, ...] = ()):
        super().__init__(message)
        self.columns = columns


class InvariantViolation(RuntimeError):
    """An internal consistency check failed (a bug, not bad input)."""


def _frozen_array(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise OlsLabError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SupportSet:
    """Ordered set of distinct 1-based column indices.

    Insertion order is kept, so a support built by the solver records the
    order in which indices were selected.
    """

    indices: tuple[int, ...] = ()

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(i < 1 for i in idx):
            raise OlsLabError(f"support indices are 1-based, got {idx}")
        if len(set(idx)) != len(idx):
            raise OlsLabError(f"duplicate indices in support {idx}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, *indices: int) -> SupportSet:
        return cls(tuple(indices))

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __contains__(self, i) -> bool:
        return i in self.indices

    def positions(self) -> list[int]:
        """0-based array positions, in support order."""
        return [i - 1 for i in self.indices]

    def check_within(self, n: int) -> None:
        bad = [i for i in self.indices if i > n]
        if bad:
            raise OlsLabError(f"indices {bad} out of range 1..{n}")

    def add(self, i: int) -> SupportSet:
        return SupportSet(self.indices + (int(i),))

    def union(self, other: Iterable[int]) -> SupportSet:
        extra = tuple(i for i in other if i not in self.indices)
        return SupportSet(self.indices + extra)

    def difference(self, other: Iterable[int]) -> SupportSet:
        drop = set(other)
        return SupportSet(tuple(i for i in self.indices if i not in drop))

    def intersection(self, other: Iterable[int]) -> SupportSet:
        keep = set(other)
        return SupportSet(tuple(i for i in self.indices if i in keep))

    def same_set(self, other: Iterable[int]) -> bool:
        return set(self.indices) == set(other)

    def issubset(self, other: Iterable[int]) -> bool:
        return set(self.indices) <= set(other)

    def sorted(self) -> SupportSet:
        return SupportSet(tuple(sorted(self.indices)))

    def __repr__(self) -> str:
        return "{" + ", ".join(map(str, self.indices)) + "}"


@dataclass(frozen=True)
class SensingMatrix:
    """Real ``m x n`` measurement operator, expected to have unit-norm columns.

    Construction only rejects non-finite entries; off-norm columns are
    reported by :func:`validate_sensing_matrix` instead of raising, so that
    deliberately broken matrices can still be inspected.
    """

    entries: np.ndarray
    column_norm_tolerance: float = DEFAULT_COLUMN_NORM_TOLERANCE

    def __post_init__(self):
        arr = _frozen_array(self.entries, 2)
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise OlsLabError(f"matrix must be at least 1x1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise OlsLabError("sensing matrix has non-finite entries")
        object.__setattr__(self, "entries", arr)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def column(self, i: int) -> np.ndarray:
        if not 1 <= i <= self.cols:
            raise OlsLabError(f"column index {i} out of range 1..{self.cols}")
        return self.entries[:, i - 1]

    def submatrix(self, J: SupportSet) -> np.ndarray:
        J.check_within(self.cols)
        return self.entries[:, J.positions()]

    def column_norms(self) -> np.ndarray:
        return np.linalg.norm(self.entries, axis=0)

    def gram(self) -> np.ndarray:
        return self.entries.T @ self.entries

    def measure(self, x: SparseSignal) -> np.ndarray:
        if x.length != self.cols:
            raise OlsLabError(f"signal length {x.length} != matrix columns {self.cols}")
        return self.entries @ x.values


@dataclass(frozen=True)
class SparseSignal:
    """Length-``n`` real vector; ``support`` lists its nonzero entries in increasing order."""

    values: np.ndarray
    support: SupportSet = field(init=False)

    def __post_init__(self):
        arr = _frozen_array(self.values, 1)
        if arr.size < 1:
            raise OlsLabError("signal must have positive length")
        if not np.all(np.isfinite(arr)):
            raise OlsLabError("signal has non-finite entries")
        object.__setattr__(self, "values", arr)
        nz = np.flatnonzero(np.abs(arr) > ZERO_THRESHOLD)
        object.__setattr__(self, "support", SupportSet(tuple(int(i) + 1 for i in nz)))

    @classmethod
    def from_support(cls, n: int, support: Iterable[int], coefficients: Sequence[float]) -> SparseSignal:
        J = SupportSet(tuple(support))
        J.check_within(n)
        if len(J) != len(coefficients):
            raise OlsLabError("need one coefficient per support index")
        values = np.zeros(n)
        values[J.positions()] = coefficients
        return cls(values)

    @property
    def length(self) -> int:
        return self.values.size

    @property
    def sparsity(self) -> int:
        return len(self.support)


def restrict_signal(x: SparseSignal, J: SupportSet) -> np.ndarray:
    """Entries of ``x`` at the indices of ``J``, in ``J``'s order."""
    J.check_within(x.length)
    return x.values[J.positions()].copy()


def validate_sensing_matrix(A: SensingMatrix) -> list[str]:
    """List violated invariants of ``A``; an empty list means it is valid."""
    report = []
    norms = A.column_norms()
    for pos in np.flatnonzero(np.abs(norms - 1.0) > A.column_norm_tolerance):
        report.append(f"column {pos + 1} has norm {norms[pos]!r}, expected 1")
    return report


@dataclass(frozen=True)
class IterationRecord:
    k: int
    scores: tuple[float, ...]
    chosen_index: int
    residual_norm: float
    estimated_support: SupportSet
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "scores": [None if np.isnan(s) else s for s in self.scores],
            "chosen_index": self.chosen_index,
            "residual_norm": self.residual_norm,
            "estimated_support": list(self.estimated_support),
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class OlsTrace:
    """Full history of an OLS run.

    ``scores`` in each record hold one entry per column (position ``i-1`` for
    index ``i``); already-selected columns are NaN.
    """

    rule: str
    initial_residual_norm: float
    iterations: tuple[IterationRecord, ...]
    final_estimate: SparseSignal

    @property
    def support(self) -> SupportSet:
        if not self.iterations:
            return SupportSet()
        return self.iterations[-1].estimated_support

    @property
    def selected(self) -> list[int]:
        return [rec.chosen_index for rec in self.iterations]

    def recovered(self, x: SparseSignal, rtol: float = 1e-8) -> bool:
        """True iff the support matches ``supp(x)`` and coefficients agree."""
        if not self.support.same_set(x.support):
            return False
        err = np.linalg.norm(self.final_estimate.values - x.values)
        return bool(err <= rtol * np.linalg.norm(x.values))

    def check_invariants(self) -> None:
        prev_norm = self.initial_residual_norm
        prev_support = SupportSet()
        for rec in self.iterations:
            if len(rec.estimated_support) != rec.k:
                raise InvariantViolation(f"|S^{rec.k}| = {len(rec.estimated_support)}")
            if rec.chosen_index in prev_support:
                raise InvariantViolation(f"index {rec.chosen_index} selected twice")
            if rec.residual_norm > prev_norm * (1 + 1e-12) + 1e-15:
                raise InvariantViolation(
                    f"residual grew at k={rec.k}: {prev_norm!r} -> {rec.residual_norm!r}"
                )
            prev_norm = rec.residual_norm
            prev_support = rec.estimated_support

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "initial_residual_norm": self.initial_residual_norm,
            "iterations": [rec.to_dict() for rec in self.iterations],
            "support": list(self.support),
            "final_estimate": [float(v) for v in self.final_estimate.values],
        }


@dataclass(frozen=True)
class RipEstimate:
    """Exact RIP constant of one order together with its certificate.

    ``delta`` is reported even when it reaches 1; ``rip_violated`` flags it.
    """

    order: int
    delta: float
    lambda_min: float
    lambda_max: float
    witness_subset: SupportSet

    @property
    def rip_violated(self) -> bool:
        return self.delta >= 1.0

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "delta": self.delta,
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "witness_subset": list(self.witness_subset),
            "rip_violated": self.rip_violated,
        }


# Plain-text matrix/vector files: header line with dimensions, then rows.

def _format_row(row) -> str:
    return " ".join(repr(float(v)) for v in row)


def write_matrix(path: str | Path, A: SensingMatrix | np.ndarray) -> None:
    arr = A.entries if isinstance(A, SensingMatrix) else np.asarray(A, dtype=float)
    lines = [f"{arr.shape[0]} {arr.shape[1]}"] + [_format_row(r) for r in arr]
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix(path: str | Path, column_norm_tolerance: float = DEFAULT_COLUMN_NORM_TOLERANCE) -> SensingMatrix:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise OlsLabError(f"{path}: empty matrix file")
    try:
        m, n = (int(t) for t in lines[0].split())
        rows = [[float(t) for t in ln.split()] for ln in lines[1:]]
    except ValueError as exc:
        raise OlsLabError(f"{path}: malformed matrix file ({exc})") from None
    if len(rows) != m or any(len(r) != n for r in rows):
        raise OlsLabError(f"{path}: expected {m} rows of {n} values")
    return SensingMatrix(np.array(rows), column_norm_tolerance)


def write_signal(path: str | Path, x: SparseSignal | np.ndarray) -> None:
    arr = x.values if isinstance(x, SparseSignal) else np.asarray(x, dtype=float)
    Path(path).write_text(f"{arr.size}\n{_format_row(arr)}\n")


def read_signal(path: str | Path) -> SparseSignal:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    try:
        n = int(lines[0])
        values = [float(t) for t in lines[1].split()] if len(lines) > 1 else []
    except (ValueError, IndexError) as exc:
        raise OlsLabError(f"{path}: malformed signal file ({exc})") from None
    if len(values) != n:
        raise OlsLabError(f"{path}: expected {n} values, got {len(values)}")
    return SparseSignal(np.array(values))

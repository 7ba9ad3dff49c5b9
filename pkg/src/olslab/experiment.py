"""Monte-Carlo phase-transition experiments and threshold boundary sweeps.

Randomness: every trial owns a ``PCG64`` generator seeded from
``SeedSequence(seed, spawn_key=(cell, trial))``. Results therefore do not
depend on worker count or scheduling order.
"""

from __future__ import annotations

import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from olslab.constructions import compute_CK, counterexample
from olslab.core import OlsLabError, SensingMatrix, SparseSignal
from olslab.ols import RULES, run_ols
from olslab.rip import exact_rip_constant

SIGNAL_MODELS = ("gaussian", "rademacher", "ones")
DELTA_ENUMERATION_CAP = 10**5
MIN_COLUMN_NORM = 1e-8


def trial_rng(seed: int, cell: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(cell, trial))))


def random_unit_column_matrix(rng: np.random.Generator, m: int, n: int) -> SensingMatrix:
    """Gaussian ``m x n`` matrix with each column scaled to unit norm.

    Columns whose raw norm falls below 1e-8 are redrawn.
    """
    G = rng.standard_normal((m, n))
    norms = np.linalg.norm(G, axis=0)
    while np.any(norms < MIN_COLUMN_NORM):
        bad = np.flatnonzero(norms < MIN_COLUMN_NORM)
        G[:, bad] = rng.standard_normal((m, bad.size))
        norms = np.linalg.norm(G, axis=0)
    return SensingMatrix(G / norms)


def random_sparse_signal(rng: np.random.Generator, n: int, K: int, model: str) -> SparseSignal:
    support = np.sort(rng.choice(n, size=K, replace=False))
    if model == "gaussian":
        coef = rng.standard_normal(K)
        while np.any(np.abs(coef) <= 1e-12):
            coef = rng.standard_normal(K)
    elif model == "rademacher":
        coef = rng.choice([-1.0, 1.0], size=K)
    elif model == "ones":
        coef = np.ones(K)
    else:
        raise OlsLabError(f"unknown signal model {model!r}; expected one of {SIGNAL_MODELS}")
    values = np.zeros(n)
    values[support] = coef
    return SparseSignal(values)


@dataclass(frozen=True)
class ExperimentConfig:
    m_range: tuple[int, ...]
    n: int
    K_range: tuple[int, ...]
    trials_per_cell: int
    signal_model: str = "gaussian"
    rule: str = "projection"
    rng_seed: int = 0
    output_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "m_range", tuple(int(m) for m in self.m_range))
        object.__setattr__(self, "K_range", tuple(int(k) for k in self.K_range))

    def validate(self) -> None:
        if not self.m_range or not self.K_range:
            raise OlsLabError("m_range and K_range must be non-empty")
        if self.trials_per_cell < 1:
            raise OlsLabError("trials_per_cell must be at least 1")
        if min(self.K_range) < 1:
            raise OlsLabError("every K must be a positive integer")
        if max(self.K_range) > min(self.m_range):
            raise OlsLabError("every K must be at most every m")
        if self.n < max(self.K_range) + 1:
            raise OlsLabError("n must be at least max K + 1")
        if self.signal_model not in SIGNAL_MODELS:
            raise OlsLabError(f"unknown signal model {self.signal_model!r}")
        if self.rule not in RULES:
            raise OlsLabError(f"unknown rule {self.rule!r}")

    def cells(self) -> list[tuple[int, int]]:
        return [(m, K) for m in self.m_range for K in self.K_range]


@dataclass(frozen=True)
class PhaseCell:
    m: int
    K: int
    trials: int
    exact_recovery_count: int
    mean_delta_estimate: float | None = None

    @property
    def rate(self) -> float:
        return self.exact_recovery_count / self.trials


def _run_trial(config: ExperimentConfig, cell: int, trial: int) -> tuple[bool, float | None]:
    m, K = config.cells()[cell]
    rng = trial_rng(config.rng_seed, cell, trial)
    A = random_unit_column_matrix(rng, m, config.n)
    x = random_sparse_signal(rng, config.n, K, config.signal_model)
    trace = run_ols(A, A.measure(x), K, config.rule)
    delta = None
    if math.comb(config.n, K + 1) <= DELTA_ENUMERATION_CAP:
        delta = exact_rip_constant(A, K + 1).delta
    return trace.support.same_set(x.support), delta


def _run_trial_args(args):
    return _run_trial(*args)


def check_writable(path: str | os.PathLike) -> None:
    p = Path(path)
    parent = p.parent if str(p.parent) else Path(".")
    if p.is_dir():
        raise OlsLabError(f"output path {p} is a directory")
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise OlsLabError(f"cannot write to {p}: parent directory missing or read-only")
    if p.exists() and not os.access(p, os.W_OK):
        raise OlsLabError(f"cannot write to {p}: file is read-only")


def run_phase_experiment(config: ExperimentConfig, *, workers: int = 1) -> list[PhaseCell]:
    """Empirical exact-support-recovery rate for every ``(m, K)`` cell.

    Writes the CSV to ``config.output_path`` when it is set.
    """
    config.validate()
    if config.output_path is not None:
        check_writable(config.output_path)
    cells = config.cells()
    tasks = [(config, c, t) for c in range(len(cells)) for t in range(config.trials_per_cell)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_trial_args, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        outcomes = [_run_trial(*t) for t in tasks]

    results = []
    for c, (m, K) in enumerate(cells):
        chunk = outcomes[c * config.trials_per_cell:(c + 1) * config.trials_per_cell]
        deltas = [d for _, d in chunk if d is not None]
        mean_delta = math.fsum(deltas) / len(deltas) if len(deltas) == len(chunk) else None
        results.append(PhaseCell(m, K, len(chunk), sum(ok for ok, _ in chunk), mean_delta))
    if config.output_path is not None:
        write_text(config.output_path, phase_csv(results))
    return results


def phase_csv(cells: list[PhaseCell]) -> str:
    with_delta = any(c.mean_delta_estimate is not None for c in cells)
    header = ["m", "K", "trials", "successes", "rate"] + (["mean_delta"] if with_delta else [])
    lines = [",".join(header)]
    for c in cells:
        row = [str(c.m), str(c.K), str(c.trials), str(c.exact_recovery_count), f"{c.rate:.6f}"]
        if with_delta:
            row.append("" if c.mean_delta_estimate is None else f"{c.mean_delta_estimate:.6f}")
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class BoundaryRow:
    delta_star: float
    ols_first_pick: int
    recovered: bool


def run_boundary_sweep(K: int, delta_grid, rule: str = "projection") -> list[BoundaryRow]:
    """Run OLS on the failure construction at each ``delta_star``.

    Recovery succeeds exactly for grid points below ``C_K``.
    """
    if K < 2:
        raise OlsLabError("no counterexample family exists for K = 1")
    rows = []
    for d in delta_grid:
        d = float(d)
        if not 0.0 < d < 1.0:
            raise OlsLabError(f"grid value {d!r} outside (0, 1)")
        A, x = counterexample(K, d)
        trace = run_ols(A, A.measure(x), K, rule)
        rows.append(BoundaryRow(d, trace.selected[0], trace.recovered(x)))
    return rows


def boundary_csv(rows: list[BoundaryRow]) -> str:
    lines = ["delta_star,ols_first_pick,recovered"]
    for r in rows:
        lines.append(f"{r.delta_star!r},{r.ols_first_pick},{str(r.recovered).lower()}")
    return "\n".join(lines) + "\n"


def default_boundary_grid(K: int, offsets=(-0.05, -0.01, -0.001, 0.0, 0.001, 0.01, 0.05)) -> list[float]:
    c = compute_CK(K)
    return [c + o for o in offsets if 0.0 < c + o < 1.0]


def write_text(path: str | os.PathLike, text: str) -> None:
    # newline="" keeps LF endings on every platform
    with io.open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)

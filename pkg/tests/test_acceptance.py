"""Acceptance criteria 1-10.

Each test reports one PASS/FAIL line through the ``report`` fixture; the
lines are repeated in the terminal summary. Run with ``-s`` to see them
inline as well.
"""

import itertools
import math
import time

import numpy as np

from olslab.checker import lemma4_bound, remark2_comparisons, theorem1_verify
from olslab.cli import main
from olslab.constructions import (
    compute_CK,
    counterexample,
    counterexample_gram,
    tightness_example,
)
from olslab.core import OlsLabError, SupportSet, write_matrix, write_signal
from olslab.experiment import default_boundary_grid, random_unit_column_matrix, run_boundary_sweep
from olslab.ols import run_ols
from olslab.rip import exact_rip_constant, modified_rip_check, monotonicity_audit

from conftest import certified_matrices, random_instance, random_signal


def proper_subsets(S):
    items = list(S)
    for r in range(len(items)):
        for c in itertools.combinations(items, r):
            yield SupportSet(c)


def test_01_threshold_constants(report):
    expected = {1: 1.0, 2: 2 / 3, 3: 4 / 7, 4: 0.5}
    errs = {K: abs(compute_CK(K) - v) / v for K, v in expected.items()}
    ok = max(errs.values()) <= 1e-15
    report("1 threshold constants", ok, f"max rel err {max(errs.values()):.1e}")
    assert ok


def test_02_counterexample_certification(report):
    t0 = time.perf_counter()
    worst, count, skipped = 0.0, 0, []
    for K in (2, 3, 4, 6, 8):
        for d in (0.1, 0.3, 0.5, 0.7, 0.9):
            try:
                counterexample_gram(K, d)
            except OlsLabError:
                skipped.append((K, d))
                continue
            A, _ = counterexample(K, d)
            worst = max(worst, abs(exact_rip_constant(A, K + 1).delta - d))
            count += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 10
    report("2 counterexample certification", ok,
           f"{count} pairs, {len(skipped)} not PSD, max |delta - delta*| {worst:.1e}, {elapsed:.2f}s")
    assert ok


def test_03_phase_boundary(report):
    t0 = time.perf_counter()
    bad = []
    for K in (2, 3, 4, 6):
        c = compute_CK(K)
        grid = sorted(set(default_boundary_grid(K)) | {c - 0.01})
        for rule in ("projection", "ratio"):
            for row in run_boundary_sweep(K, grid, rule):
                if row.delta_star >= c and (row.recovered or row.ols_first_pick != 1):
                    bad.append((K, rule, row))
                if abs(row.delta_star - (c - 0.01)) < 1e-15 and not row.recovered:
                    bad.append((K, rule, row))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 5
    report("3 optimality phase boundary", ok, f"{len(bad)} mismatches, {elapsed:.2f}s")
    assert ok


def test_04_tail_bound_tightness(report):
    t0 = time.perf_counter()
    worst = 0.0
    for K in range(2, 9):
        A, x = tightness_example(K)
        res = lemma4_bound(A, x, SupportSet())
        worst = max(worst, abs(res.measured - 1), abs(res.bound - 1), abs(res.delta - 1 / math.sqrt(K)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 1
    report("4 tightness example", ok, f"max deviation {worst:.1e}, {elapsed:.2f}s")
    assert ok


def test_05_rule_equivalence(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5005)
    mismatches = 0
    for _ in range(1000):
        m, n = int(rng.integers(4, 11)), int(rng.integers(6, 17))
        A, x = random_instance(rng, m, n, int(rng.integers(1, 5)))
        y = A.measure(x)
        K = x.sparsity
        if run_ols(A, y, K, "projection").selected != run_ols(A, y, K, "ratio").selected:
            mismatches += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 30
    report("5 selection rule equivalence", ok, f"1000 instances, {mismatches} mismatches, {elapsed:.2f}s")
    assert ok


def test_06_projected_rip_sandwich(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6006)
    worst, checked = math.inf, 0
    while checked < 500:
        m, n = int(rng.integers(4, 11)), int(rng.integers(6, 15))
        A, x = random_instance(rng, m, n, int(rng.integers(1, 4)))
        J = SupportSet(tuple(int(i) + 1 for i in rng.choice(n, size=int(rng.integers(0, 4)), replace=False)))
        size = len(x.support.union(J))
        if size > m:
            continue
        d = exact_rip_constant(A, size).delta
        if d >= 1:
            continue
        lo, hi = modified_rip_check(A, x, J, delta=d)
        worst = min(worst, lo, hi)
        checked += 1
    elapsed = time.perf_counter() - t0
    ok = worst >= -1e-9 and elapsed < 60
    report("6 projected RIP sandwich", ok, f"500 instances, min slack {worst:.1e}, {elapsed:.2f}s")
    assert ok


def test_07_recovery_end_to_end(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7007)
    runs, failures = 0, 0
    for K in (1, 2, 3):
        c = compute_CK(K)
        for i, (A, d) in enumerate(certified_matrices(rng, K, 50, lambda d, c=c: d < c)):
            rep = theorem1_verify(A, 100, K, 1000 * K + i, delta=d)
            runs += rep.runs
            failures += len(rep.failures)
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and elapsed < 120
    report("7 recovery under the threshold", ok,
           f"150 matrices, {runs} runs, {failures} failures, {elapsed:.2f}s")
    assert ok


def test_08_monotonicity(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8008)
    worst_drop = 0.0
    for _ in range(50):
        m, n = int(rng.integers(3, 9)), int(rng.integers(5, 13))
        A = random_unit_column_matrix(rng, m, n)
        deltas = monotonicity_audit(A, min(5, n))
        worst_drop = max([worst_drop] + [a - b for a, b in zip(deltas, deltas[1:])])
    elapsed = time.perf_counter() - t0
    ok = worst_drop <= 1e-12 and elapsed < 60
    report("8 RIP constant monotonicity", ok, f"50 matrices, max drop {worst_drop:.1e}, {elapsed:.2f}s")
    assert ok


def test_09_bound_factor(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9009)
    target = 2 / math.sqrt(3)
    worst, chain_failures, checked = 0.0, 0, 0
    instances = []
    for K in (1, 2, 3):
        for A, d in certified_matrices(rng, K, 20, lambda d: d <= 0.5):
            for _ in range(3):
                instances.append((A, random_signal(rng, A.cols, K), d))
    for K in range(4, 9):
        A, x = tightness_example(K)
        instances.append((A, x, None))
    for A, x, d in instances:
        for S_k in proper_subsets(x.support):
            rep = remark2_comparisons(A, x, S_k, delta=d)
            if not rep.in_hypothesis:
                continue
            worst = max(worst, abs(rep.ratio - target))
            chain_failures += not rep.chain_holds
            checked += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and chain_failures == 0 and checked > 0 and elapsed < 10
    report("9 bound improvement factor", ok,
           f"{checked} instances, max |ratio - 2/sqrt(3)| {worst:.1e}, {chain_failures} chain failures, {elapsed:.2f}s")
    assert ok


def _invoke(argv, out_path):
    code = main(argv + ["--out", str(out_path)])
    return code, out_path.read_bytes()


def test_10_cli_determinism(report, tmp_path, capsys):
    t0 = time.perf_counter()
    A, x = counterexample(2, 0.6)
    write_matrix(tmp_path / "A.txt", A)
    write_signal(tmp_path / "x.txt", x)
    (B, _), = certified_matrices(np.random.default_rng(1010), 2, 1, lambda d: d <= 0.5)
    write_matrix(tmp_path / "B.txt", B)
    mat, sig, cert = str(tmp_path / "A.txt"), str(tmp_path / "x.txt"), str(tmp_path / "B.txt")
    commands = {
        "ols solve": ["ols", "solve", "--matrix", mat, "--signal", sig, "--sparsity", "2"],
        "ols solve csv": ["ols", "solve", "--matrix", mat, "--signal", sig, "--sparsity", "2",
                          "--rule", "ratio", "--format", "csv"],
        "rip compute": ["rip", "compute", "--matrix", cert, "--order", "3", "--spot-check", "200"],
        "construct counterexample": ["construct", "counterexample", "--K", "3", "--delta", "0.5"],
        "construct tightness": ["construct", "tightness", "--K", "5"],
        "verify": ["verify", "--matrix", cert, "--sparsity", "2", "--trials", "20"],
        "experiment phase": ["experiment", "phase", "--n", "10", "--m", "5,8", "--K", "1,2",
                             "--trials", "20", "--signal-model", "rademacher"],
        "experiment boundary": ["experiment", "boundary", "--K", "3"],
    }
    unstable = []
    for name, argv in commands.items():
        argv = argv + ["--seed", "77"]
        outputs = []
        for run, workers in enumerate(("1", "1", "4")):
            code, data = _invoke(argv + ["--workers", workers], tmp_path / f"out{run}")
            outputs.append((code, data))
        if any(o != outputs[0] for o in outputs) or outputs[0][0] != 0 or not outputs[0][1]:
            unstable.append(name)
    capsys.readouterr()
    elapsed = time.perf_counter() - t0
    ok = not unstable and elapsed < 60
    report("10 CLI determinism", ok,
           f"{len(commands)} commands, unstable: {unstable or 'none'}, {elapsed:.2f}s")
    assert ok

"""Command-line entry point: ``olslab <command> [options]``.

Exit status is 0 on success, 1 on invalid input, 2 when an internal
invariant check fails.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys

import numpy as np

from olslab import RNG_ALGORITHM, __version__
from olslab.checker import (
    HYPOTHESIS_TOL,
    TAIL_BOUND_DELTA_CAP,
    HypothesisError,
    lemma4_bound,
    remark2_comparisons,
    selection_path,
    theorem1_verify,
)
from olslab.constructions import compute_CK, counterexample, tightness_example
from olslab.core import (
    InvariantViolation,
    OlsLabError,
    SensingMatrix,
    SparseSignal,
    SupportSet,
    read_matrix,
    read_signal,
    write_matrix,
    write_signal,
)
from olslab.experiment import (
    SIGNAL_MODELS,
    ExperimentConfig,
    boundary_csv,
    check_writable,
    default_boundary_grid,
    phase_csv,
    random_sparse_signal,
    run_boundary_sweep,
    run_phase_experiment,
    trial_rng,
    write_text,
)
from olslab.ols import RULES, run_ols
from olslab.rip import exact_rip_constant, rip_definition_spot_check

SUITES = ("lemma4", "eq7", "remark2", "theorem1")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _to_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _csv(header: list[str], rows: list[list]) -> str:
    def cell(v):
        if isinstance(v, bool):
            return str(v).lower()
        if isinstance(v, float):
            return repr(v)
        if isinstance(v, (list, tuple)):
            return " ".join(str(i) for i in v)
        return "" if v is None else str(v)

    lines = [",".join(header)] + [",".join(cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _emit(args, text: str) -> None:
    if args.out:
        write_text(args.out, text)
    else:
        sys.stdout.write(text)


def _prepare_out(args) -> None:
    if args.out:
        check_writable(args.out)


# ---- ols ---------------------------------------------------------------

def cmd_ols_solve(args) -> None:
    A = read_matrix(args.matrix)
    x = read_signal(args.signal)
    if args.trace:
        check_writable(args.trace)
    trace = run_ols(A, A.measure(x), args.sparsity, args.rule)
    if args.trace:
        write_text(args.trace, _to_json(trace.to_dict()))
    if args.format == "csv":
        rows = [
            [rec.k, rec.chosen_index, rec.residual_norm, list(rec.estimated_support), rec.degenerate]
            for rec in trace.iterations
        ]
        _emit(args, _csv(["k", "chosen_index", "residual_norm", "support", "degenerate"], rows))
        return
    result = {
        "rule": trace.rule,
        "sparsity": args.sparsity,
        "selected": trace.selected,
        "support": list(trace.support),
        "true_support": list(x.support),
        "recovered": trace.recovered(x),
        "final_estimate": [float(v) for v in trace.final_estimate.values],
        "residual_norm": trace.iterations[-1].residual_norm,
    }
    _emit(args, _to_json(result))


# ---- rip ---------------------------------------------------------------

def cmd_rip_compute(args) -> None:
    A = read_matrix(args.matrix)
    est = exact_rip_constant(A, args.order, workers=args.workers)
    result = est.to_dict()
    if args.spot_check:
        result["spot_check_trials"] = args.spot_check
        result["spot_check_worst_excess"] = rip_definition_spot_check(A, est, args.spot_check, args.seed)
    if args.format == "csv":
        keys = list(result)
        _emit(args, _csv(keys, [[result[k] for k in keys]]))
    else:
        _emit(args, _to_json(result))


# ---- construct ---------------------------------------------------------

def _write_construction(args, A: SensingMatrix, x: SparseSignal, info: dict) -> None:
    for path in (args.out_matrix, args.out_signal):
        if path:
            check_writable(path)
    if args.out_matrix:
        write_matrix(args.out_matrix, A)
    if args.out_signal:
        write_signal(args.out_signal, x)
    info.update(rows=A.rows, cols=A.cols, support=list(x.support))
    if args.format == "csv":
        keys = list(info)
        _emit(args, _csv(keys, [[info[k] for k in keys]]))
    else:
        _emit(args, _to_json(info))


def cmd_construct_counterexample(args) -> None:
    A, x = counterexample(args.K, args.delta)
    info = {"kind": "counterexample", "K": args.K, "delta_star": args.delta, "C_K": compute_CK(args.K)}
    _write_construction(args, A, x, info)


def cmd_construct_tightness(args) -> None:
    A, x = tightness_example(args.K)
    _write_construction(args, A, x, {"kind": "tightness", "K": args.K})


# ---- verify ------------------------------------------------------------

def _proper_subsets(S: SupportSet):
    items = list(S)
    for size in range(len(items)):
        for combo in itertools.combinations(items, size):
            yield SupportSet(combo)


def _summary(status: str, evaluated: int, violations: list, **extra) -> dict:
    out = {"status": status, "evaluated": evaluated, "violations": violations}
    out.update(extra)
    return out


def cmd_verify(args) -> None:
    A = read_matrix(args.matrix)
    K = args.sparsity
    if not 1 <= K < A.cols:
        raise OlsLabError(f"sparsity K={K} must lie in 1..{A.cols - 1}")
    delta = exact_rip_constant(A, K + 1, workers=args.workers).delta
    if args.signal:
        signals = [read_signal(args.signal)]
        if signals[0].sparsity != K:
            raise OlsLabError(f"signal has {signals[0].sparsity} nonzeros, expected {K}")
    else:
        signals = [random_sparse_signal(trial_rng(args.seed, 0, t), A.cols, K, "gaussian")
                   for t in range(args.trials)]
    suites = SUITES if args.suite == "all" else (args.suite,)
    checks = {}

    if "lemma4" in suites:
        if delta > TAIL_BOUND_DELTA_CAP + HYPOTHESIS_TOL:
            checks["lemma4"] = _summary("out_of_hypothesis", 0, [])
        else:
            bad, count, worst = [], 0, -np.inf
            for s, x in enumerate(signals):
                for S_k in _proper_subsets(x.support):
                    res = lemma4_bound(A, x, S_k, delta=delta)
                    count += 1
                    worst = max(worst, res.measured - res.bound)
                    if not res.holds:
                        bad.append({"signal": s, "S_k": list(S_k), "measured": res.measured, "bound": res.bound})
            checks["lemma4"] = _summary("pass" if not bad else "fail", count, bad, max_excess=float(worst))

    if "eq7" in suites:
        bad = []
        for s, x in enumerate(signals):
            path = selection_path(A, x, "ratio")
            if not path.consistent:
                bad.append({"signal": s, "verdicts": list(path.verdicts), "ols_recovered": path.ols_recovered})
        checks["eq7"] = _summary("pass" if not bad else "fail", len(signals), bad)

    if "remark2" in suites:
        if delta > TAIL_BOUND_DELTA_CAP + HYPOTHESIS_TOL:
            checks["remark2"] = _summary("out_of_hypothesis", 0, [])
        else:
            bad, count, worst_ratio = [], 0, 0.0
            for s, x in enumerate(signals):
                for S_k in _proper_subsets(x.support):
                    rep = remark2_comparisons(A, x, S_k, delta=delta)
                    count += 1
                    worst_ratio = max(worst_ratio, abs(rep.ratio - 2.0 / np.sqrt(3.0)))
                    if not rep.chain_holds:
                        bad.append({"signal": s, "S_k": list(S_k)})
            checks["remark2"] = _summary(
                "pass" if not bad else "fail", count, bad, max_ratio_error=float(worst_ratio)
            )

    if "theorem1" in suites:
        try:
            rep = theorem1_verify(A, args.trials, K, args.seed, delta=delta, workers=args.workers)
        except HypothesisError as exc:
            checks["theorem1"] = _summary("out_of_hypothesis", 0, [], reason=str(exc))
        else:
            fails = rep.to_dict()["failures"]
            checks["theorem1"] = _summary("pass" if rep.passed else "fail", rep.runs, fails)

    report = {"K": K, "delta": delta, "C_K": compute_CK(K), "signals": len(signals), "checks": checks}
    if args.format == "csv":
        rows = [[name, c["status"], c["evaluated"], len(c["violations"])] for name, c in checks.items()]
        _emit(args, _csv(["check", "status", "evaluated", "violations"], rows))
    else:
        _emit(args, _to_json(report))
    if any(c["status"] == "fail" for c in checks.values()):
        raise InvariantViolation("verification failed: " + ", ".join(
            n for n, c in checks.items() if c["status"] == "fail"))


# ---- experiment --------------------------------------------------------

def cmd_experiment_phase(args) -> None:
    config = ExperimentConfig(
        m_range=tuple(args.m),
        n=args.n,
        K_range=tuple(args.K),
        trials_per_cell=args.trials,
        signal_model=args.signal_model,
        rule=args.rule,
        rng_seed=args.seed,
    )
    config.validate()
    _prepare_out(args)
    cells = run_phase_experiment(config, workers=args.workers)
    if args.format == "json":
        _emit(args, _to_json([
            {"m": c.m, "K": c.K, "trials": c.trials, "successes": c.exact_recovery_count,
             "rate": c.rate, "mean_delta": c.mean_delta_estimate}
            for c in cells
        ]))
    else:
        _emit(args, phase_csv(cells))


def cmd_experiment_boundary(args) -> None:
    grid = args.deltas if args.deltas else default_boundary_grid(args.K)
    _prepare_out(args)
    rows = run_boundary_sweep(args.K, grid, args.rule)
    if args.format == "json":
        _emit(args, _to_json({
            "K": args.K,
            "C_K": compute_CK(args.K),
            "rows": [{"delta_star": r.delta_star, "ols_first_pick": r.ols_first_pick,
                      "recovered": r.recovered} for r in rows],
        }))
    else:
        _emit(args, boundary_csv(rows))


# ---- parser ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--workers", type=int, default=1, help="parallel workers (results do not depend on it)")

    parser = _Parser(prog="olslab", description=__doc__.splitlines()[0], formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version",
                        version=f"olslab {__version__} (rng: {RNG_ALGORITHM})")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ols = sub.add_parser("ols", help="run the OLS solver").add_subparsers(dest="action", required=True)
    p = ols.add_parser("solve", parents=[common], help="recover a signal from y = Ax")
    p.add_argument("--matrix", required=True)
    p.add_argument("--signal", required=True, help="the true signal x; y is formed as Ax")
    p.add_argument("--sparsity", type=int, required=True)
    p.add_argument("--rule", choices=RULES, default="projection")
    p.add_argument("--trace", help="write the full per-iteration trace as JSON")
    p.set_defaults(func=cmd_ols_solve, default_format="json")

    rip = sub.add_parser("rip", help="exact RIP constants").add_subparsers(dest="action", required=True)
    p = rip.add_parser("compute", parents=[common])
    p.add_argument("--matrix", required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--spot-check", type=int, default=0, metavar="N",
                   help="also test N random sparse unit vectors against the certificate")
    p.set_defaults(func=cmd_rip_compute, default_format="json")

    con = sub.add_parser("construct", help="explicit matrices").add_subparsers(dest="action", required=True)
    p = con.add_parser("counterexample", parents=[common])
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--out-matrix")
    p.add_argument("--out-signal")
    p.set_defaults(func=cmd_construct_counterexample, default_format="json")
    p = con.add_parser("tightness", parents=[common])
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--out-matrix")
    p.add_argument("--out-signal")
    p.set_defaults(func=cmd_construct_tightness, default_format="json")

    p = sub.add_parser("verify", parents=[common], help="check the recovery bounds on a matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--sparsity", type=int, required=True)
    p.add_argument("--signal", help="check this signal instead of random ones")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.set_defaults(func=cmd_verify, default_format="json")

    exp = sub.add_parser("experiment", help="Monte-Carlo and boundary experiments").add_subparsers(
        dest="action", required=True)
    p = exp.add_parser("phase", parents=[common])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=_int_list, required=True, help="comma-separated row counts")
    p.add_argument("--K", type=_int_list, required=True, help="comma-separated sparsities")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--signal-model", choices=SIGNAL_MODELS, default="gaussian")
    p.add_argument("--rule", choices=RULES, default="projection")
    p.set_defaults(func=cmd_experiment_phase, default_format="csv")
    p = exp.add_parser("boundary", parents=[common])
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--deltas", type=_float_list, help="comma-separated grid (default: around C_K)")
    p.add_argument("--rule", choices=RULES, default="projection")
    p.set_defaults(func=cmd_experiment_boundary, default_format="csv")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # --help and --version still exit; usage errors become a return code
        if exc.code:
            return 1
        raise
    if args.format is None:
        args.format = args.default_format
    if args.workers < 1:
        print("olslab: error: --workers must be at least 1", file=sys.stderr)
        return 1
    try:
        args.func(args)
    except InvariantViolation as exc:
        print(f"olslab: invariant violated: {exc}", file=sys.stderr)
        return 2
    except (OlsLabError, OSError) as exc:
        print(f"olslab: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Orthogonal least squares sparse-recovery laboratory.

Exact RIP constants by enumeration, the OLS greedy solver with full tracing,
explicit counterexample and tightness constructions, numeric checks of the
recovery bounds, and a Monte-Carlo phase-transition runner.
"""

from olslab.core import (
    InvariantViolation,
    OlsLabError,
    OlsTrace,
    IterationRecord,
    RipEstimate,
    SensingMatrix,
    SparseSignal,
    SupportSet,
    restrict_signal,
    validate_sensing_matrix,
)
from olslab.ols import (
    identify_projection,
    identify_ratio,
    least_squares_on_support,
    project_complement,
    run_ols,
)
from olslab.rip import (
    exact_rip_constant,
    modified_rip_check,
    monotonicity_audit,
    rip_definition_spot_check,
)
from olslab.constructions import (
    GramSpec,
    compute_CK,
    counterexample,
    counterexample_gram,
    gram_to_matrix,
    tightness_example,
)
from olslab.checker import (
    lemma4_bound,
    remark2_comparisons,
    selection_margin,
    support_side_lower_bound,
    theorem1_verify,
)

__version__ = "0.1.0"
RNG_ALGORITHM = "PCG64 seeded by numpy SeedSequence(seed, spawn_key=(cell, trial))"

__all__ = [
    "GramSpec",
    "InvariantViolation",
    "IterationRecord",
    "OlsLabError",
    "OlsTrace",
    "RipEstimate",
    "SensingMatrix",
    "SparseSignal",
    "SupportSet",
    "compute_CK",
    "counterexample",
    "counterexample_gram",
    "exact_rip_constant",
    "gram_to_matrix",
    "identify_projection",
    "identify_ratio",
    "least_squares_on_support",
    "lemma4_bound",
    "modified_rip_check",
    "monotonicity_audit",
    "project_complement",
    "remark2_comparisons",
    "restrict_signal",
    "rip_definition_spot_check",
    "run_ols",
    "selection_margin",
    "support_side_lower_bound",
    "theorem1_verify",
    "tightness_example",
    "validate_sensing_matrix",
]

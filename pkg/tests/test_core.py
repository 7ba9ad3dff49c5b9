import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from olslab.core import (
    OlsLabError,
    SensingMatrix,
    SparseSignal,
    SupportSet,
    read_matrix,
    read_signal,
    restrict_signal,
    validate_sensing_matrix,
    write_matrix,
    write_signal,
)


def test_identity_is_valid():
    assert validate_sensing_matrix(SensingMatrix(np.eye(3))) == []


def test_scaled_column_is_reported():
    A = np.eye(3)
    A[:, 1] *= 2
    report = validate_sensing_matrix(SensingMatrix(A))
    assert len(report) == 1
    assert "column 2" in report[0]


def test_tightness_matrix_k3_is_unit_norm():
    # first column: (K-1)/K + K * (1/K)^2 = 2/3 + 1/3 = 1
    K = 3
    A = np.zeros((K + 1, K + 1))
    A[0, 0] = math.sqrt((K - 1) / K)
    A[1:, 0] = 1 / K
    A[1:, 1:] = np.eye(K)
    assert validate_sensing_matrix(SensingMatrix(A)) == []


def test_column_tolerance_is_configurable():
    A = np.eye(2)
    A[0, 0] = 1 + 1e-7
    assert validate_sensing_matrix(SensingMatrix(A)) != []
    assert validate_sensing_matrix(SensingMatrix(A, column_norm_tolerance=1e-6)) == []


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_non_finite_matrix_is_hard_error(bad):
    A = np.eye(2)
    A[1, 0] = bad
    with pytest.raises(OlsLabError):
        SensingMatrix(A)


def test_matrix_is_immutable():
    A = SensingMatrix(np.eye(2))
    with pytest.raises(ValueError):
        A.entries[0, 0] = 5.0


def test_restrict_signal_examples():
    assert restrict_signal(SparseSignal([0, 1, 1]), SupportSet.of(2, 3)).tolist() == [1, 1]
    assert restrict_signal(SparseSignal([0, 1, 1]), SupportSet()).size == 0
    assert restrict_signal(SparseSignal([5, 0, 7]), SupportSet.of(3, 1)).tolist() == [7, 5]


def test_restrict_out_of_range():
    with pytest.raises(OlsLabError):
        restrict_signal(SparseSignal([1.0, 2.0]), SupportSet.of(3))


def test_support_threshold():
    x = SparseSignal([0.0, 1e-13, -2e-12, 3.0])
    assert list(x.support) == [3, 4]


@pytest.mark.parametrize("indices", [(0,), (1, 1), (-2,)])
def test_support_rejects_bad_indices(indices):
    with pytest.raises(OlsLabError):
        SupportSet(indices)


def test_support_keeps_insertion_order():
    S = SupportSet.of(4, 2).add(7)
    assert list(S) == [4, 2, 7]
    assert S.positions() == [3, 1, 6]
    assert S.same_set([2, 4, 7])


@given(arrays(np.float64, st.integers(1, 12), elements=st.sampled_from([0.0, -1.5, 2.0, 1e-3])))
def test_restrict_to_own_support_gives_nonzeros(values):
    x = SparseSignal(values)
    restricted = restrict_signal(x, x.support)
    assert restricted.tolist() == [v for v in values if v != 0.0]


def test_set_difference_cardinality_exhaustive():
    ground = range(1, 9)
    subsets = [SupportSet(c) for r in range(9) for c in itertools.combinations(ground, r)]
    for S in subsets:
        for J in subsets:
            assert len(S.difference(J)) == len(S) - len(S.intersection(J))


def test_matrix_and_signal_files_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    M = rng.standard_normal((3, 5))
    write_matrix(tmp_path / "a.txt", M)
    assert (tmp_path / "a.txt").read_text().splitlines()[0] == "3 5"
    back = read_matrix(tmp_path / "a.txt")
    assert np.array_equal(back.entries, M)

    x = np.array([0.0, 1 / 3, 0.0, -2.5])
    write_signal(tmp_path / "x.txt", x)
    assert np.array_equal(read_signal(tmp_path / "x.txt").values, x)


def test_malformed_matrix_file(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("2 2\n1 0\n")
    with pytest.raises(OlsLabError):
        read_matrix(p)

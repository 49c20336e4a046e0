import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from projangle.errors import (
    EmptyInputError,
    MatrixFormatError,
    NotHermitianError,
    ValidationError,
)
from projangle.linalg_core import (
    Tolerance,
    cluster_eigenvalues,
    hermitian_eig,
    matrix_from_json,
    matrix_to_json,
    op_norm,
    random_hermitian,
    random_unitary,
    range_projection,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_op_norm_examples():
    assert op_norm(np.eye(3)) == pytest.approx(1.0, abs=1e-15)
    assert op_norm(np.zeros((2, 2))) == 0.0
    # singular values of [[0, 2], [0, 0]] are 2 and 0
    assert op_norm([[0, 2], [0, 0]]) == pytest.approx(2.0, abs=1e-15)


def test_op_norm_rejects_empty():
    with pytest.raises(EmptyInputError):
        op_norm(np.zeros((0, 0)))


def test_op_norm_rejects_nonfinite():
    with pytest.raises(ValidationError):
        op_norm([[np.nan, 0], [0, 1]])


def test_hermitian_eig_examples():
    s = hermitian_eig(np.diag([1.0, 0.25, 0.0]))
    np.testing.assert_allclose(s.eigenvalues, [1.0, 0.25, 0.0], atol=1e-15)
    # rank-one projection onto (1, 1)/sqrt 2: char. polynomial x^2 - x
    s = hermitian_eig([[0.5, 0.5], [0.5, 0.5]])
    np.testing.assert_allclose(s.eigenvalues, [1.0, 0.0], atol=1e-15)
    s = hermitian_eig(np.zeros((3, 3)))
    np.testing.assert_array_equal(s.eigenvalues, np.zeros(3))


def test_hermitian_eig_reports_asymmetry():
    with pytest.raises(NotHermitianError) as info:
        hermitian_eig([[0, 1], [0, 0]])
    assert info.value.asymmetry == pytest.approx(1.0)


def test_cluster_examples():
    cl = cluster_eigenvalues([1.0, 1.0 - 1e-14, 0.0], 1e-9)
    assert [c.multiplicity for c in cl] == [2, 1]
    assert cl[0].representative == pytest.approx(1.0)
    assert cl[1].representative == 0.0
    assert len(cluster_eigenvalues([0.9, 0.5, 0.1], 0.01)) == 3


def test_cluster_cos_squared_family():
    vals = [np.cos(1.0 / n) ** 2 for n in range(2, 7)]
    gaps = np.abs(np.diff(sorted(vals)))
    # the oracle: every pairwise gap exceeds the radius, so nothing merges
    assert gaps.min() > 1e-3
    cl = cluster_eigenvalues(vals, 1e-3)
    assert len(cl) == 5
    assert sum(c.multiplicity for c in cl) == 5


def test_cluster_rejects_bad_radius():
    with pytest.raises(ValidationError):
        cluster_eigenvalues([1.0], 0.0)


def test_tolerance_ordering():
    Tolerance(1e-12, 1e-8, 5)
    for bad in [(1e-6, 1e-8, 10), (0.0, 1e-6, 10), (1e-10, 1.0, 10), (1e-10, 1e-6, 0)]:
        with pytest.raises(ValidationError):
            Tolerance(*bad)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, n=st.integers(1, 64))
def test_hermitian_reconstruction(seed, n):
    rng = np.random.default_rng(seed)
    a = random_hermitian(rng, n)
    s = hermitian_eig(a)
    scale = max(1.0, op_norm(a))
    assert op_norm(a - s.reconstruct()) <= 1e-10 * scale
    v = s.eigenvectors
    assert op_norm(v.conj().T @ v - np.eye(n)) <= 1e-10
    assert np.all(np.diff(s.eigenvalues) <= 0)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, n=st.integers(1, 16))
def test_op_norm_unitary_invariance(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    u, v = random_unitary(rng, n), random_unitary(rng, n)
    assert op_norm(u @ a @ v) == pytest.approx(op_norm(a), abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, n=st.integers(1, 16))
def test_op_norm_submultiplicative(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    assert op_norm(a @ b) <= op_norm(a) * op_norm(b) + 1e-10


def test_cluster_is_order_independent(rng):
    vals = rng.uniform(0, 1, 30)
    vals[5] = vals[6] + 1e-12
    a = cluster_eigenvalues(vals, 1e-6)
    b = cluster_eigenvalues(rng.permutation(vals), 1e-6)
    assert a == b


def test_range_projection(rng):
    m = rng.standard_normal((5, 2)) @ rng.standard_normal((2, 7))
    p = range_projection(m)
    assert np.trace(p).real == pytest.approx(2.0)
    assert op_norm(p @ m - m) < 1e-12


def test_matrix_json_round_trip(rng):
    m = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    doc = json.loads(json.dumps(matrix_to_json(m)))
    assert doc["rows"] == 3 and doc["cols"] == 4 and len(doc["data"]) == 12
    np.testing.assert_array_equal(matrix_from_json(doc), m)


@pytest.mark.parametrize("doc", [
    {"rows": 2, "cols": 2, "data": [[1, 0]] * 3},
    {"rows": 2, "cols": 2, "data": [[1, 0, 0]] * 4},
    {"rows": 0, "cols": 2, "data": []},
    {"rows": 2, "data": [[1, 0]] * 4},
    [[1, 0]],
    {"rows": 1, "cols": 1, "data": [["a", 0]]},
])
def test_matrix_json_rejects_malformed(doc):
    with pytest.raises(MatrixFormatError):
        matrix_from_json(doc)

import numpy as np
import pytest
from hypothesis import given, seed, settings, strategies as st

from exceptions import DimensionMismatchError, IllSeparatedClusterError, MatrixSizeError, SylvesterIllConditionedError
from engine.engine_linalg import (as_matrix, cluster_eigenvalues, full_subspace, invariance_residual, kronecker,
                                  meet_all, reorder_schur, schur, span, subspace_complement, subspace_containment,
                                  subspace_distance, subspace_join, subspace_meet, sylvester_solve, trace_of,
                                  zero_subspace)

# Test data
UPPER = np.array([[1.0, 2.0, 0.5], [0.0, 3.0, 1.0], [0.0, 0.0, -1.0]], dtype=complex)
E1, E2, E3 = np.eye(3, dtype=complex)


@pytest.fixture(scope="function")
def rng():
    return np.random.default_rng(11)


@pytest.fixture(scope="function")
def plane():
    """span(e1, e2) in C^3"""
    return span(np.column_stack([E1, E2]))


def test_as_matrix_rejects_rectangular():
    """Test square check"""
    with pytest.raises(DimensionMismatchError):
        as_matrix(np.ones((2, 3)))


def test_as_matrix_rejects_oversized(monkeypatch):
    """Test the dimension cap"""
    monkeypatch.setattr("engine.engine_linalg.MAX_DIM", 2)
    with pytest.raises(MatrixSizeError):
        as_matrix(np.eye(3))


def test_schur_reconstructs(rng):
    """Test A = Q U Q^H with U upper triangular"""
    a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    q, u = schur(a)
    assert np.allclose(q @ u @ q.conj().T, a, atol=1e-12)
    assert np.allclose(np.tril(u, -1), 0)
    assert np.allclose(q.conj().T @ q, np.eye(6), atol=1e-12)


@pytest.mark.parametrize("d", [
    2, 3, 8, 16,
    pytest.param(32, marks=pytest.mark.slow),
    pytest.param(64, marks=pytest.mark.slow),
])
def test_schur_round_trip_seeded(d):
    """Test the Schur round trip over seeded complex matrices"""
    rng = np.random.default_rng(d)
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, u = schur(a)
    assert np.linalg.norm(q @ u @ q.conj().T - a) <= 1e-12 * d * np.linalg.norm(a)
    assert np.linalg.norm(q.conj().T @ q - np.eye(d), 2) <= 1e-12 * d
    assert not np.any(np.tril(u, -1))


def test_reorder_schur_moves_selection_first():
    """Test reordering by predicate"""
    q, u = schur(UPPER)
    q2, u2 = reorder_schur(q, u, lambda x: abs(x + 1) < 0.5)
    assert abs(u2[0, 0] + 1) < 1e-12
    assert np.allclose(q2 @ u2 @ q2.conj().T, UPPER, atol=1e-12)


def test_reorder_schur_rejects_split_cluster():
    """Test that a selection splitting a degenerate eigenvalue fails"""
    q, u = schur(np.diag([1.0, 1.0, 2.0]))
    mask = np.zeros(3, dtype=bool)
    mask[0] = True
    with pytest.raises(IllSeparatedClusterError):
        reorder_schur(q, u, mask)


def test_sylvester_solve(rng):
    """Test A X - X B = C"""
    a = np.diag([1.0, 2.0]).astype(complex)
    b = np.diag([-1.0, 5.0, 7.0]).astype(complex)
    c = rng.standard_normal((2, 3)) + 0j
    x = sylvester_solve(a, b, c)
    assert np.allclose(a @ x - x @ b, c, atol=1e-12)


def test_sylvester_scalar():
    """Test 1 x - x 3 = 2 gives x = -1"""
    x = sylvester_solve(np.array([[1.0]]), np.array([[3.0]]), np.array([[2.0]]))
    assert np.allclose(x, [[-1.0]], atol=1e-14)


def test_sylvester_rejects_shared_eigenvalue():
    """Test the spectral gap check"""
    with pytest.raises(SylvesterIllConditionedError):
        sylvester_solve(np.eye(2), np.eye(2), np.ones((2, 2)))


def test_span_rank_and_zero():
    """Test rank detection of dependent columns"""
    assert span(np.column_stack([E1, 2 * E1, E2])).dim == 2
    assert span(np.zeros((3, 2))).dim == 0


def test_meet_and_join(plane):
    """Test meet and join of coordinate subspaces"""
    other = span(np.column_stack([E2, E3]))
    meet = subspace_meet(plane, other)
    assert meet.dim == 1
    assert subspace_distance(meet, span(E2)) < 1e-12
    assert subspace_join(plane, other).dim == 3


def test_meet_with_zero(plane):
    """Test the meet with the zero subspace"""
    assert subspace_meet(plane, zero_subspace(3)).dim == 0


def test_meet_all_starts_from_full(plane):
    """Test the empty meet is the whole space"""
    assert meet_all([], 3).dim == 3
    assert meet_all([plane], 3).dim == 2


def test_complement(plane):
    """Test the orthogonal complement"""
    perp = subspace_complement(plane)
    assert subspace_distance(perp, span(E3)) < 1e-12
    assert subspace_complement(zero_subspace(3)).dim == 3
    assert subspace_complement(full_subspace(3)).dim == 0


def test_containment(plane):
    """Test containment is zero exactly when the second subspace sits inside the first"""
    assert subspace_containment(plane, span(E1 + E2)) < 1e-12
    assert subspace_containment(plane, span(E3)) == pytest.approx(1.0)


def test_trace_of_is_exact(plane):
    """Test the trace is a rank fraction"""
    assert trace_of(plane).value == pytest.approx(2 / 3)
    assert trace_of(plane).rank == 2


def test_invariance_residual():
    """Test upper triangular matrices leave the leading coordinate planes invariant"""
    assert invariance_residual(UPPER, span(E1)) < 1e-14
    assert invariance_residual(UPPER, span(E2)) > 1


def test_subspace_ambient_mismatch():
    """Test lattice operations refuse mixed ambient dimensions"""
    with pytest.raises(DimensionMismatchError):
        subspace_meet(full_subspace(2), full_subspace(3))


def test_kronecker_cap(monkeypatch):
    """Test the Kronecker product size check"""
    monkeypatch.setattr("engine.engine_linalg.MAX_DIM", 8)
    with pytest.raises(MatrixSizeError):
        kronecker(np.eye(3), np.eye(3))


def test_cluster_eigenvalues_chains():
    """Test transitive chaining and ordering by mean"""
    groups = cluster_eigenvalues(np.array([2.0, 0.0, 0.05, 0.1, 2.0 + 1e-9]), 0.06)
    assert [sorted(g.tolist()) for g in groups] == [[1, 2, 3], [0, 4]]


@seed(20240611)
@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=2, max_value=8), st.integers(min_value=0, max_value=2 ** 31))
def test_meet_of_random_subspaces_is_inside_both(d, s):
    """Test the meet lies in both arguments"""
    rng = np.random.default_rng(s)
    k = d // 2 + 1
    shared = rng.standard_normal((d, 1)) + 1j * rng.standard_normal((d, 1))
    u = span(np.hstack([shared, rng.standard_normal((d, k - 1))]))
    v = span(np.hstack([shared, rng.standard_normal((d, k - 1))]))
    meet = subspace_meet(u, v)
    assert meet.dim >= 1
    assert subspace_containment(u, meet) < 1e-8
    assert subspace_containment(v, meet) < 1e-8

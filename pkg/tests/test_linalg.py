import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from todaqr.errors import DomainError, SingularMatrixError, UnsupportedSizeError
from todaqr.linalg import (
    TridiagonalMatrix,
    charpoly_roots_small,
    hermitian_eigenvalues,
    householder_tridiagonalize,
    matrix_function,
    qr_factorize,
    read_matrix_csv,
    symmetric_eigen,
    tridiagonal_eigenvalues,
    write_matrix_csv,
)


def _sym(rng, n):
    A = rng.standard_normal((n, n))
    return (A + A.T) / 2


finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_householder_leaves_tridiagonal_alone():
    M = TridiagonalMatrix([1.0, 2.0, 3.0, 4.0], [0.5, -1.0, 2.0]).to_dense()
    T, Q = householder_tridiagonalize(M)
    assert np.array_equal(T.to_dense(), M)
    assert np.array_equal(Q, np.eye(4))
    M2 = np.array([[1.0, 3.0], [3.0, -2.0]])
    T2, Q2 = householder_tridiagonalize(M2)
    assert np.array_equal(T2.to_dense(), M2) and np.array_equal(Q2, np.eye(2))


def test_householder_preserves_spectrum():
    rng = np.random.default_rng(0)
    M = _sym(rng, 6)
    T, Q = householder_tridiagonalize(M)
    assert np.allclose(Q @ T.to_dense() @ Q.T, M, atol=1e-12)
    assert np.allclose(tridiagonal_eigenvalues(T), np.linalg.eigvalsh(M), atol=1e-10)


def test_eigen_small_cases():
    assert np.allclose(symmetric_eigen(np.diag([3.0, 1.0, 2.0])).values, [1, 2, 3])
    assert np.allclose(symmetric_eigen(np.array([[0.0, 1.0], [1.0, 0.0]])).values, [-1, 1])


def test_eigen_vectors_orthonormal():
    rng = np.random.default_rng(1)
    M = _sym(rng, 9)
    s = symmetric_eigen(M, vectors=True)
    V = s.vectors
    assert np.allclose(V.T @ V, np.eye(9), atol=1e-12)
    assert np.allclose(M @ V, V * s.values, atol=1e-11)


@pytest.mark.parametrize("n", [3, 4])
def test_eigen_matches_charpoly(n):
    rng = np.random.default_rng(n)
    for _ in range(50):
        M = _sym(rng, n)
        roots = charpoly_roots_small(M)
        assert np.max(np.abs(roots.imag)) < 1e-8
        assert np.allclose(np.sort(roots.real), symmetric_eigen(M).values, atol=1e-8)


@given(arrays(float, (7, 7), elements=finite))
@settings(max_examples=40, deadline=None)
def test_eigen_trace_and_frobenius(A):
    M = (A + A.T) / 2
    lam = symmetric_eigen(M).values
    scale = 1 + np.abs(M).max()
    assert np.all(np.diff(lam) >= 0)
    assert abs(lam.sum() - np.trace(M)) < 1e-10 * scale * 7
    assert abs(np.sum(lam ** 2) - np.sum(M ** 2)) < 1e-9 * scale ** 2 * 49


def test_hermitian_eigenvalues():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    H = (A + A.conj().T) / 2
    assert np.allclose(hermitian_eigenvalues(H), np.linalg.eigvalsh(H), atol=1e-12)


def test_qr_small_cases():
    Q, R = qr_factorize(np.eye(3))
    assert np.allclose(Q, np.eye(3)) and np.allclose(R, np.eye(3))
    Q, R = qr_factorize(np.diag([2.0, 3.0]))
    assert np.allclose(Q, np.eye(2)) and np.allclose(R, np.diag([2.0, 3.0]))
    Q, R = qr_factorize(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(Q, [[0, 1], [1, 0]]) and np.allclose(R, np.eye(2))


@given(arrays(float, (5, 5), elements=finite))
@settings(max_examples=40, deadline=None)
def test_qr_properties(A):
    A = A + 20 * np.eye(5)  # keeps R well away from singular
    Q, R = qr_factorize(A)
    assert np.allclose(Q.T @ Q, np.eye(5), atol=1e-12)
    assert np.allclose(np.tril(R, -1), 0)
    assert np.all(np.diag(R) > 0)
    assert np.allclose(Q @ R, A, atol=1e-10 * np.abs(A).max())


def test_qr_singular():
    with pytest.raises(SingularMatrixError):
        qr_factorize(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_matrix_function():
    rng = np.random.default_rng(3)
    M = _sym(rng, 5)
    assert np.allclose(matrix_function(M, "identity"), M, atol=1e-10)
    assert np.allclose(matrix_function(np.diag([0.0, math.log(2)]), "exp"), np.diag([1.0, 2.0]), atol=1e-14)
    A = rng.standard_normal((5, 5))
    P = A @ A.T + np.eye(5)
    assert np.allclose(matrix_function(matrix_function(P, "log"), "exp"), P, atol=1e-8)
    with pytest.raises(DomainError):
        matrix_function(np.diag([1.0, -1.0]), "log")


def test_charpoly_roots_small():
    assert np.allclose(charpoly_roots_small(np.diag([1.0, 2.0])), [1, 2])
    assert np.allclose(charpoly_roots_small(np.array([[0.0, 1.0], [1.0, 0.0]])), [-1, 1])
    r5 = math.sqrt(5)
    assert np.allclose(charpoly_roots_small(np.array([[2.0, 1.0], [1.0, 1.0]])), [(3 - r5) / 2, (3 + r5) / 2],
                       atol=1e-15)
    with pytest.raises(UnsupportedSizeError):
        charpoly_roots_small(np.eye(5))


def test_non_symmetric_rejected():
    with pytest.raises(ValueError):
        symmetric_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_matrix_csv_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    M = _sym(rng, 4)
    path = tmp_path / "m.csv"
    write_matrix_csv(path, M)
    assert np.array_equal(read_matrix_csv(path), M)

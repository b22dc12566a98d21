"""Dense symmetric linear algebra written out from scratch.

The eigensolver here is the oracle the flow code is checked against, so it
deliberately shares nothing with the Toda / shiftless-QR machinery: it is a
Householder reduction followed by implicit-shift QL.
"""
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from . import kernels
from .errors import (
    ConvergenceError,
    DomainError,
    SingularMatrixError,
    UnsupportedSizeError,
)


@dataclass(frozen=True)
class TridiagonalMatrix:
    """Jacobi matrix with diagonal ``a`` and off-diagonal ``b``."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.ndim != 1 or b.shape != (max(a.size - 1, 0),):
            raise ValueError(f"need len(b) == len(a) - 1, got {a.size} and {b.size}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self):
        return self.a.size

    def to_dense(self):
        return np.diag(self.a) + np.diag(self.b, 1) + np.diag(self.b, -1)

    @classmethod
    def from_dense(cls, M):
        M = np.asarray(M, dtype=float)
        return cls(np.diag(M).copy(), np.diag(M, -1).copy())


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray
    vectors: Optional[np.ndarray] = None

    def __len__(self):
        return self.values.size


def check_symmetric(M, name="M"):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    if not np.array_equal(M, M.T.conj() if np.iscomplexobj(M) else M.T):
        raise ValueError(f"{name} is not exactly symmetric")
    return M


def is_tridiagonal(M):
    M = np.asarray(M)
    n = M.shape[0]
    if n <= 2:
        return True
    return not np.any(np.triu(M, 2)) and not np.any(np.tril(M, -2))


def householder_tridiagonalize(M):
    """Return ``(T, Q)`` with ``Q.T @ M @ Q == T.to_dense()`` and ``Q[:, 0] == e_1``.

    Already-tridiagonal input comes back unchanged with ``Q = I``.
    """
    M = np.array(check_symmetric(M), dtype=float)
    Q = kernels.householder_tridiag(M)
    return TridiagonalMatrix(np.diag(M).copy(), np.diag(M, -1).copy()), Q


def _pow2_scale(x):
    big = float(np.max(np.abs(x))) if np.size(x) else 0.0
    if big == 0.0 or not np.isfinite(big):
        return 1.0
    return math.ldexp(1.0, math.frexp(big)[1])


def _tridiagonal_eigen(a, b, Z, vectors):
    n = a.size
    d = np.array(a, dtype=float)
    e = np.zeros(n)
    e[: n - 1] = b
    status = kernels.tql(d, e, Z, vectors, 50 * max(n, 1))
    if status != kernels.OK:
        raise ConvergenceError(f"implicit QL did not converge within {50 * n} sweeps")
    order = np.argsort(d, kind="stable")
    return d[order], (Z[:, order] if vectors else None)


def symmetric_eigen(M, vectors=False):
    """Eigenvalues (ascending) and optionally orthonormal eigenvectors of symmetric M."""
    M = np.asarray(check_symmetric(M), dtype=float)
    n = M.shape[0]
    if n == 0:
        return Spectrum(np.empty(0), np.empty((0, 0)) if vectors else None)
    # power-of-two scaling is exact and keeps squared entries clear of under/overflow
    scale = _pow2_scale(M)
    M = M / scale
    if is_tridiagonal(M):
        Q = np.eye(n)
        a, b = np.diag(M).copy(), np.diag(M, -1).copy()
    else:
        T, Q = householder_tridiagonalize(M)
        a, b = T.a, T.b
    Z = Q if vectors else np.empty((0, 0))
    values, vecs = _tridiagonal_eigen(a, b, Z, vectors)
    return Spectrum(values * scale, vecs)


def tridiagonal_eigenvalues(T):
    """Ascending eigenvalues of a :class:`TridiagonalMatrix` in O(n^2)."""
    scale = _pow2_scale(np.concatenate([T.a, T.b]))
    values, _ = _tridiagonal_eigen(T.a / scale, T.b / scale, np.empty((0, 0)), False)
    return values * scale


def hermitian_eigenvalues(H):
    """Eigenvalues of a Hermitian matrix via its real symmetric 2n x 2n embedding.

    Each eigenvalue of [[Re H, -Im H], [Im H, Re H]] appears twice.
    """
    H = np.asarray(H)
    check_symmetric(H, "H")
    n = H.shape[0]
    big = np.block([[H.real, -H.imag], [H.imag, H.real]])
    # guard against -0.0 vs 0.0 asymmetry in the embedding
    big = 0.5 * (big + big.T)
    values = symmetric_eigen(big).values
    return values.reshape(n, 2).mean(axis=1)


def qr_factorize(M):
    """Householder QR with ``R_ii > 0``.

    Raises :class:`SingularMatrixError` when some ``|R_ii|`` falls below
    ``1e-14 * ||M||_F``.
    """
    M = np.array(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("qr_factorize expects a square matrix")
    scale = np.linalg.norm(M)
    R = M
    Q = kernels.qr_householder(R)
    diag = np.diag(R)
    tiny = np.flatnonzero(diag < 1e-14 * scale) if scale > 0 else np.arange(M.shape[0])
    if tiny.size:
        raise SingularMatrixError(
            f"matrix is singular to working precision (R[{tiny[0]},{tiny[0]}] = {diag[tiny[0]]:.3e})"
        )
    return Q, np.triu(R)


_NAMED = {
    "identity": lambda lam: lam,
    "exp": np.exp,
}


def _apply_scalar(g, lam):
    if isinstance(g, str):
        if g == "log":
            bad = lam[lam <= 0.0]
            if bad.size:
                raise DomainError(f"log undefined at non-positive eigenvalue {bad[0]!r}")
            return np.log(lam)
        try:
            g = _NAMED[g]
        except KeyError:
            raise ValueError(f"unknown scalar function {g!r}") from None
    with np.errstate(all="ignore"):
        out = np.asarray(g(lam), dtype=float)
    bad = ~np.isfinite(out)
    if bad.any():
        raise DomainError(f"function not finite at eigenvalue {lam[bad][0]!r}")
    return out


def matrix_function(M, g: Union[str, Callable]):
    """V diag(g(lambda)) V^T for symmetric M; ``g`` is a callable or 'identity'/'log'/'exp'."""
    spec = symmetric_eigen(M, vectors=True)
    vals = _apply_scalar(g, spec.values)
    V = spec.vectors
    out = (V * vals) @ V.T
    return 0.5 * (out + out.T)


def _charpoly(M):
    """Coefficients of det(z I - M), highest degree first (Faddeev-LeVerrier)."""
    n = M.shape[0]
    coeffs = [1.0]
    B = np.eye(n)
    for k in range(1, n + 1):
        AB = M @ B
        c = -np.trace(AB) / k
        coeffs.append(c)
        B = AB + c * np.eye(n)
    return np.array(coeffs)


def polish_roots(coeffs, roots, iterations=3):
    """Newton refinement of polynomial roots (coefficients highest first)."""
    p = np.poly1d(coeffs)
    dp = p.deriv()
    roots = np.asarray(roots, dtype=complex).copy()
    for _ in range(iterations):
        d = dp(roots)
        step = np.where(d != 0, p(roots) / np.where(d != 0, d, 1), 0)
        roots = roots - step
    return roots


def polynomial_roots(coeffs):
    coeffs = np.asarray(coeffs)
    deg = coeffs.size - 1
    if deg == 1:
        return np.array([-coeffs[1] / coeffs[0]], dtype=complex)
    if deg == 2:
        a, b, c = coeffs
        disc = np.sqrt(complex(b * b - 4 * a * c))
        # avoid cancellation in the smaller root
        q = -0.5 * (b + (disc if b.real >= 0 else -disc))
        if q == 0:
            return np.array([0.0, 0.0], dtype=complex)
        return np.array([q / a, c / q], dtype=complex)
    return polish_roots(coeffs, np.roots(coeffs))


def charpoly_roots_small(M, max_n=4):
    """Roots of det(M - z) for n <= 4, sorted by (real, imag)."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if n > max_n:
        raise UnsupportedSizeError(f"charpoly_roots_small supports n <= {max_n}, got {n}")
    if n == 0:
        return np.empty(0, dtype=complex)
    roots = polynomial_roots(_charpoly(M))
    return np.sort_complex(roots)


# -- CSV fixtures ------------------------------------------------------------

def _fmt(x):
    if isinstance(x, complex) or np.iscomplexobj(x):
        x = complex(x)
        return repr(x).strip("()")
    return "%.17g" % x


def write_matrix_csv(path, M):
    M = np.asarray(M)
    with open(path, "w") as fh:
        fh.write("%d\n" % M.shape[0])
        for row in M:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_matrix_csv(path):
    with open(path) as fh:
        n = int(fh.readline())
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError(f"{path}: expected {n} rows of {n} entries")
    if any("j" in x for r in rows for x in r):
        return np.array([[complex(x) for x in r] for r in rows])
    return np.array([[float(x) for x in r] for r in rows])

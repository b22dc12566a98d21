"""Isospectral flows: Flaschka variables, Toda, H_G flows, shiftless QR.

Conventions: ``B(M) = M_- - M_-^T`` with ``M_-`` the strictly lower part, and
every H_G flow solves ``dM/dt = [M, B(g(M))]``.  With that sign the flow is
``M(t) = Q^T M0 Q`` where ``exp(t g(M0)) = QR`` and ``R_ii > 0``; the
identity gives Toda and ``g = log`` interpolates the QR iterates at integer
times.
"""
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import kernels
from .errors import DomainError, RangeError, SingularMatrixError
from .linalg import (
    TridiagonalMatrix,
    _apply_scalar,
    check_symmetric,
    is_tridiagonal,
    polynomial_roots,
    qr_factorize,
    symmetric_eigen,
)

_EXP_LIMIT = 700.0


# ---------------------------------------------------------------------------
# Flaschka map
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlaschkaState:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("Flaschka state must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def hamiltonian(self):
        """H_T = sum y^2 / 2 + sum exp(x_k - x_{k+1})."""
        return 0.5 * float(self.y @ self.y) + float(np.exp(-np.diff(self.x)).sum())


def flaschka(state):
    """a_k = -y_k / 2,  b_k = exp((x_k - x_{k+1}) / 2) / 2."""
    half = -0.5 * np.diff(state.x)
    if np.any(half > _EXP_LIMIT):
        k = int(np.argmax(half > _EXP_LIMIT))
        raise RangeError(f"x[{k}] - x[{k + 1}] = {2 * half[k]:.6g} overflows b_{k + 1}")
    return TridiagonalMatrix(-0.5 * state.y, 0.5 * np.exp(half))


def inverse_flaschka(T):
    """Invert the Flaschka map with the gauge sum(x) = 0."""
    b = np.asarray(T.b, dtype=float)
    if np.any(b <= 0):
        k = int(np.argmax(b <= 0))
        raise DomainError(f"b[{k}] = {b[k]!r} is not positive")
    gaps = 2.0 * np.log(2.0 * b)  # x_k - x_{k+1}
    x = np.concatenate([[0.0], -np.cumsum(gaps)])
    x -= x.mean()
    return FlaschkaState(x, -2.0 * np.asarray(T.a, dtype=float))


# ---------------------------------------------------------------------------
# Lax equation
# ---------------------------------------------------------------------------

def lax_b(M):
    lower = np.tril(M, -1)
    return lower - lower.T


def lax_rhs(M, g=None):
    """[M, B(g(M))]; ``g=None`` is the Toda vector field [M, B(M)]."""
    M = np.asarray(M, dtype=float)
    G = M if g is None else _matrix_g(M, g)
    B = lax_b(G)
    out = M @ B - B @ M
    return 0.5 * (out + out.T)


def _matrix_g(M, g):
    if isinstance(g, str) and g == "identity":
        return M
    spec = symmetric_eigen(M, vectors=True)
    vals = _apply_scalar(g, spec.values)
    out = (spec.vectors * vals) @ spec.vectors.T
    return 0.5 * (out + out.T)


# ---------------------------------------------------------------------------
# Factorisation integrator
# ---------------------------------------------------------------------------

def orthogonal_factor(A):
    """Q of A = QR with R_ii >= 0, via LAPACK (the from-scratch QR is the oracle)."""
    Q, R = np.linalg.qr(A)
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return Q * signs


class EigenbasisFlow:
    """Exact H_G flow evaluated in the eigenbasis of M0.

    Writing M0 = V diag(lam) V^T and W(t) = V^T Q(t), the flow is
    M(t) = W^T diag(lam) W where W(t+h) is the Q factor of
    diag(exp(h g(lam))) W(t).  Rows are kept in decreasing order of g(lam) so
    the scaled matrix is row-graded (Householder QR is accurate on it), and
    long steps are chunked so no scale factor underflows.
    """

    max_chunk_spread = 200.0

    def __init__(self, M0, g="identity"):
        M0 = np.asarray(check_symmetric(M0), dtype=float)
        spec = symmetric_eigen(M0, vectors=True)
        rates = _apply_scalar(g, spec.values)
        order = np.argsort(-rates, kind="stable")
        self.lam = spec.values[order]
        self.rates = rates[order] - rates.max()
        self.W = spec.vectors[:, order].T.copy()
        self.t = 0.0
        self._M0 = M0

    def advance(self, h):
        if h < 0:
            raise ValueError("flow time must be non-negative")
        if h == 0:
            return self
        spread = -self.rates.min()
        chunks = max(1, math.ceil(h * spread / self.max_chunk_spread))
        step = h / chunks
        scale = np.exp(step * self.rates)[:, None]
        for _ in range(chunks):
            # D W is nonsingular (W orthogonal, D > 0); its pivots are graded
            # by design, so no relative singularity test applies here
            self.W = orthogonal_factor(scale * self.W)
        self.t += h
        return self

    def matrix(self):
        if self.t == 0.0:
            return self._M0.copy()
        M = self.W.T @ (self.lam[:, None] * self.W)
        return 0.5 * (M + M.T)

    def copy(self):
        other = object.__new__(EigenbasisFlow)
        other.__dict__.update(self.__dict__)
        other.W = self.W.copy()
        return other


def _is_diagonal(M):
    return not np.any(M - np.diag(np.diag(M)))


def toda_flow_rk4(M0, t, dt=1e-3, g=None):
    """Classical RK4 on dM/dt = [M, B(g(M))], symmetrised after every step."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    M = np.array(check_symmetric(M0), dtype=float)
    if t == 0:
        return M
    steps = max(1, math.ceil(t / dt - 1e-12))
    h = t / steps
    for _ in range(steps):
        k1 = lax_rhs(M, g)
        k2 = lax_rhs(M + 0.5 * h * k1, g)
        k3 = lax_rhs(M + 0.5 * h * k2, g)
        k4 = lax_rhs(M + h * k3, g)
        M = M + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        M = 0.5 * (M + M.T)
    return M


def g_flow(M0, t, g: Union[str, Callable] = "identity", integrator="factorization", dt=1e-3):
    """Evaluate the H_G flow from M0 at time t.

    ``g`` is 'identity' (Toda), 'log' (the QR flow; M0 must be positive
    definite) or a vectorised callable.  ``integrator='rk4'`` integrates the
    Lax equation instead of factorising.
    """
    if t < 0:
        raise ValueError("flow time must be non-negative")
    M0 = np.asarray(check_symmetric(M0), dtype=float)
    if integrator == "rk4":
        return toda_flow_rk4(M0, t, dt, None if g == "identity" else g)
    if integrator != "factorization":
        raise ValueError(f"unknown integrator {integrator!r}")
    if t == 0:
        return M0.copy()
    flow = EigenbasisFlow(M0, g)  # validates the domain of g
    if _is_diagonal(M0):
        return M0.copy()
    return flow.advance(t).matrix()


@dataclass(frozen=True)
class FlowSpec:
    g: Union[str, Callable] = "identity"
    t: float = 1.0
    integrator: str = "factorization"
    dt: float = 1e-3

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("t must be >= 0")
        if self.integrator == "rk4" and self.dt <= 0:
            raise ValueError("dt must be > 0 for rk4")

    def __call__(self, M0):
        return g_flow(M0, self.t, self.g, self.integrator, self.dt)


# ---------------------------------------------------------------------------
# Toda lattice on Jacobi matrices
# ---------------------------------------------------------------------------

def positive_jacobi(T):
    """Flip signs of b by a diagonal +-1 similarity that fixes e_1."""
    return TridiagonalMatrix(T.a.copy(), np.abs(T.b))


def lattice_step_size(T, courant=0.02):
    """RK4 step for the lattice: ``courant`` over a Gershgorin bound of ||M||."""
    b = np.abs(T.b)
    radius = np.abs(T.a).copy()
    radius[:-1] += b
    radius[1:] += b
    return courant / max(float(radius.max()), 1e-300)


def toda_lattice(T, t, h=None):
    """Toda flow of a Jacobi matrix, integrated in (a, log b) with RK4.

    Negative off-diagonals are first made positive (the flow commutes with
    that similarity up to the same signs).  Zero off-diagonals stay zero.
    """
    signs = np.sign(T.b)
    T = positive_jacobi(T)
    if t == 0 or T.n < 2:
        return TridiagonalMatrix(T.a.copy(), T.b * np.where(signs == 0, 1, signs))
    h = lattice_step_size(T) if h is None else h
    steps = max(1, math.ceil(t / h - 1e-12))
    a = T.a.copy()
    with np.errstate(divide="ignore"):
        lb = np.log(T.b)
    kernels.toda_lattice_advance(a, lb, t / steps, steps)
    return TridiagonalMatrix(a, np.exp(lb) * np.where(signs == 0, 1, signs))


# ---------------------------------------------------------------------------
# Shiftless QR
# ---------------------------------------------------------------------------

def qr_step(M):
    """M' = RQ for M = QR with R_ii > 0.

    Symmetric tridiagonal input goes through a Givens kernel and stays
    exactly tridiagonal.
    """
    M = np.asarray(M, dtype=float)
    if M.shape[0] == M.shape[1] and is_tridiagonal(M) and np.array_equal(M, M.T):
        a = np.diag(M).copy()
        b = np.diag(M, -1).copy()
        scale = np.linalg.norm(M)
        if scale == 0 or np.min(_pivots(M)) < 1e-14 * scale:
            raise SingularMatrixError("QR step on a matrix singular to working precision")
        status = kernels.tridiag_qr_step(a, b)
        if status != kernels.OK:
            raise SingularMatrixError("QR step on a singular tridiagonal matrix")
        return np.diag(a) + np.diag(b, 1) + np.diag(b, -1)
    Q, R = qr_factorize(M)
    out = R @ Q
    if np.array_equal(M, M.T):
        out = 0.5 * (out + out.T)
    return out


def _pivots(M):
    """|R_ii| of the QR factorisation of a tridiagonal matrix (via Givens norms)."""
    a = np.diag(M)
    b = np.diag(M, -1)
    n = a.size
    piv = np.empty(n)
    x, y = a[0], (b[0] if n > 1 else 0.0)
    for k in range(n - 1):
        r = math.hypot(x, b[k])
        piv[k] = r
        c, s = (x / r, b[k] / r) if r else (1.0, 0.0)
        x = -s * y + c * a[k + 1]
        y = c * b[k + 1] if k + 1 < n - 1 else 0.0
    piv[n - 1] = abs(x)
    return piv


def qr_iterate(M0, k):
    M = np.asarray(M0, dtype=float)
    for _ in range(k):
        M = qr_step(M)
    return M


def stroboscope_check(M0, k):
    """||g_flow(M0, log, t=k) - M_k||_F for the QR iterates M_k of M0."""
    M0 = np.asarray(check_symmetric(M0), dtype=float)
    if not is_tridiagonal(M0):
        raise DomainError("stroboscope check needs a tridiagonal matrix")
    if k == 0:
        return 0.0
    lam = symmetric_eigen(M0).values
    if lam[0] <= 0:
        raise DomainError(f"M0 is not positive definite (eigenvalue {lam[0]!r})")
    return float(np.linalg.norm(g_flow(M0, k, "log") - qr_iterate(M0, k)))


# ---------------------------------------------------------------------------
# Chopped integrals of full Toda
# ---------------------------------------------------------------------------

class ChoppedSpectrum(NamedTuple):
    roots: np.ndarray
    degenerate: bool
    coefficients: np.ndarray  # det((M - z)_j), highest degree first


def chopped_polynomial(M, j):
    """Coefficients (highest first) of det((M - z)_j) by exact cofactor expansion.

    (M - z)_j keeps rows j..n-1 and columns 0..n-j-1 of M - z.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if not 0 <= j <= n // 2:
        raise ValueError(f"j must lie in [0, {n // 2}], got {j}")
    size = n - j
    if size > 8:
        raise ValueError("chopped determinants are only supported for n - j <= 8")
    rows = range(j, n)
    # subset DP over columns: table[mask] is the signed sum over partial permutations
    deg = size + 1
    table = {0: np.zeros(deg)}
    table[0][0] = 1.0
    for depth, r in enumerate(rows):
        nxt = {}
        for mask, poly in table.items():
            for c in range(size):
                if mask >> c & 1:
                    continue
                sign = -1.0 if bin(mask >> (c + 1)).count("1") % 2 else 1.0
                entry = np.zeros(deg)
                entry[0] = M[r, c]
                if r == c:
                    entry[1] = -1.0
                prod = np.zeros(deg)
                prod[:] = poly * entry[0]
                if entry[1]:
                    prod[1:] += -poly[:-1]
                key = mask | (1 << c)
                nxt[key] = nxt.get(key, 0.0) + sign * prod
        table = nxt
    low_first = table[(1 << size) - 1]
    return low_first[::-1].copy()


def chopped_spectrum(M, j):
    """Roots of det((M - z)_j) = 0; j = 0 is the ordinary spectrum."""
    M = np.asarray(M, dtype=float)
    coeffs = chopped_polynomial(M, j)
    scale = max(1.0, float(np.linalg.norm(M)))
    size = coeffs.size - 1
    tol = 1e-12 * scale ** np.arange(size, -1, -1)
    nonzero = np.flatnonzero(np.abs(coeffs) > tol)
    if nonzero.size == 0 or nonzero[0] == size:
        return ChoppedSpectrum(np.empty(0, dtype=complex), True, coeffs)
    trimmed = coeffs[nonzero[0]:]
    roots = polynomial_roots(trimmed)
    return ChoppedSpectrum(np.sort_complex(roots), False, coeffs)


def root_set_distance(a, b):
    """Largest gap between two root multisets under the best one-to-one matching.

    Sorting is not enough: a conjugate pair swaps order when the real parts
    differ by round-off.
    """
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if a.size != b.size:
        return math.inf
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())

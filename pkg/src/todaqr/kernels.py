"""Hot numeric kernels.

Every kernel has a loop-level version compiled with numba (``*_nb``) and a
vectorised numpy version (``*_np``).  The public names at the bottom of the
module dispatch on :data:`todaqr._accel.USE_NUMBA`; both variants stay
importable so tests and the benchmark can compare them directly.

Kernels mutate their array arguments where documented; callers pass copies.
"""
import math
from bisect import bisect_left

import numpy as np

from ._accel import USE_NUMBA, njit

# status codes returned by compiled kernels (numba cannot raise rich errors)
OK = 0
NOT_CONVERGED = 1
SINGULAR = 2


# ---------------------------------------------------------------------------
# Householder reduction to tridiagonal form
# ---------------------------------------------------------------------------

@njit
def householder_tridiag_nb(A):
    """Reduce symmetric ``A`` in place; return the accumulated transform Q.

    On exit A = Q^T A_in Q is tridiagonal and Q e_1 = e_1.
    """
    n = A.shape[0]
    Q = np.eye(n)
    v = np.zeros(n)
    p = np.zeros(n)
    w = np.zeros(n)
    for k in range(n - 2):
        big = 0.0
        for i in range(k + 2, n):
            big = max(big, abs(A[i, k]))
        if big == 0.0:
            continue
        # norms of the column scaled by its largest entry cannot under/overflow
        big = max(big, abs(A[k + 1, k]))
        tail = 0.0
        for i in range(k + 2, n):
            tail += (A[i, k] / big) ** 2
        x0 = A[k + 1, k] / big
        nx = math.sqrt(x0 * x0 + tail)
        alpha = -nx if x0 >= 0.0 else nx
        v[k + 1] = x0 - alpha
        for i in range(k + 2, n):
            v[i] = A[i, k] / big
        alpha *= big
        beta = 2.0 / (v[k + 1] * v[k + 1] + tail)
        for i in range(k + 1, n):
            s = 0.0
            for j in range(k + 1, n):
                s += A[i, j] * v[j]
            p[i] = beta * s
        kk = 0.0
        for i in range(k + 1, n):
            kk += v[i] * p[i]
        kk *= 0.5 * beta
        for i in range(k + 1, n):
            w[i] = p[i] - kk * v[i]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i, j] -= v[i] * w[j] + w[i] * v[j]
        A[k + 1, k] = alpha
        A[k, k + 1] = alpha
        for i in range(k + 2, n):
            A[i, k] = 0.0
            A[k, i] = 0.0
        for i in range(n):
            s = 0.0
            for j in range(k + 1, n):
                s += Q[i, j] * v[j]
            s *= beta
            for j in range(k + 1, n):
                Q[i, j] -= s * v[j]
    return Q


def householder_tridiag_np(A):
    n = A.shape[0]
    Q = np.eye(n)
    for k in range(n - 2):
        x = A[k + 1:, k]
        if not np.any(x[1:]):
            continue
        big = np.max(np.abs(x))
        v = x / big
        tail = float(v[1:] @ v[1:])
        x0 = v[0]
        nx = math.sqrt(x0 * x0 + tail)
        alpha = -nx if x0 >= 0.0 else nx
        v[0] = x0 - alpha
        alpha *= big
        beta = 2.0 / (v[0] * v[0] + tail)
        sub = A[k + 1:, k + 1:]
        p = beta * (sub @ v)
        w = p - (0.5 * beta * (v @ p)) * v
        sub -= np.outer(v, w) + np.outer(w, v)
        A[k + 1:, k] = 0.0
        A[k, k + 1:] = 0.0
        A[k + 1, k] = alpha
        A[k, k + 1] = alpha
        s = beta * (Q[:, k + 1:] @ v)
        Q[:, k + 1:] -= np.outer(s, v)
    return Q


# ---------------------------------------------------------------------------
# Implicit QL on a symmetric tridiagonal matrix
# ---------------------------------------------------------------------------

@njit
def tql_nb(d, e, Z, want_vectors, max_sweeps):
    """Eigen-decompose the tridiagonal (d, e) in place.

    ``e`` has length n with the off-diagonal in e[0..n-2]; it is destroyed.
    When ``want_vectors`` the rotations are accumulated into the columns of Z.
    Returns a status code.
    """
    n = d.shape[0]
    eps = 2.220446049250313e-16
    # absolute floor eps * ||T||: a purely relative test never fires between tiny pivots
    anorm = 0.0
    for i in range(n):
        anorm = max(anorm, abs(d[i]) + abs(e[i]))
    floor = eps * anorm
    sweeps = 0
    for l in range(n):
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd or abs(e[m]) <= floor:
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > max_sweeps:
                return NOT_CONVERGED
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0.0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            early = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    early = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if want_vectors:
                    for k in range(Z.shape[0]):
                        f = Z[k, i + 1]
                        Z[k, i + 1] = s * Z[k, i] + c * f
                        Z[k, i] = c * Z[k, i] - s * f
                i -= 1
            if early:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return OK


def tql_np(d, e, Z, want_vectors, max_sweeps):
    n = d.shape[0]
    eps = np.finfo(float).eps
    floor = eps * float(np.max(np.abs(d) + np.abs(e))) if n else 0.0
    sweeps = 0
    for l in range(n):
        while True:
            m = l
            while m < n - 1:
                if abs(e[m]) <= max(eps * (abs(d[m]) + abs(d[m + 1])), floor):
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > max_sweeps:
                return NOT_CONVERGED
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            early = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    early = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if want_vectors:
                    zi = Z[:, i].copy()
                    Z[:, i] = c * zi - s * Z[:, i + 1]
                    Z[:, i + 1] = s * zi + c * Z[:, i + 1]
            if early:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return OK


# ---------------------------------------------------------------------------
# Householder QR with positive diagonal
# ---------------------------------------------------------------------------

@njit
def qr_householder_nb(A):
    """Factor A (overwritten by R) and return Q with R_ii >= 0."""
    n = A.shape[0]
    Q = np.eye(n)
    v = np.zeros(n)
    for k in range(n - 1):
        tail = 0.0
        for i in range(k + 1, n):
            tail += A[i, k] * A[i, k]
        if tail == 0.0:
            continue
        x0 = A[k, k]
        nx = math.sqrt(x0 * x0 + tail)
        alpha = -nx if x0 >= 0.0 else nx
        v[k] = x0 - alpha
        for i in range(k + 1, n):
            v[i] = A[i, k]
        beta = 2.0 / (v[k] * v[k] + tail)
        for j in range(k + 1, n):
            s = 0.0
            for i in range(k, n):
                s += v[i] * A[i, j]
            s *= beta
            for i in range(k, n):
                A[i, j] -= s * v[i]
        A[k, k] = alpha
        for i in range(k + 1, n):
            A[i, k] = 0.0
        for i in range(n):
            s = 0.0
            for j in range(k, n):
                s += Q[i, j] * v[j]
            s *= beta
            for j in range(k, n):
                Q[i, j] -= s * v[j]
    for k in range(n):
        if A[k, k] < 0.0:
            for j in range(k, n):
                A[k, j] = -A[k, j]
            for i in range(n):
                Q[i, k] = -Q[i, k]
    return Q


def qr_householder_np(A):
    n = A.shape[0]
    Q = np.eye(n)
    for k in range(n - 1):
        x = A[k:, k]
        if not np.any(x[1:]):
            continue
        big = np.max(np.abs(x))
        v = x / big
        tail = float(v[1:] @ v[1:])
        x0 = v[0]
        nx = math.sqrt(x0 * x0 + tail)
        alpha = -nx if x0 >= 0.0 else nx
        v[0] = x0 - alpha
        alpha *= big
        beta = 2.0 / (v[0] * v[0] + tail)
        A[k:, k + 1:] -= np.outer(v, beta * (v @ A[k:, k + 1:]))
        A[k:, k] = 0.0
        A[k, k] = alpha
        Q[:, k:] -= np.outer(beta * (Q[:, k:] @ v), v)
    neg = np.diag(A) < 0.0
    A[neg, :] *= -1.0
    Q[:, neg] *= -1.0
    return Q


# ---------------------------------------------------------------------------
# Unshifted QR step on a symmetric tridiagonal matrix (Givens)
# ---------------------------------------------------------------------------

@njit
def tridiag_qr_step_nb(a, b):
    """One step M -> RQ on the Jacobi matrix (a, b), in place.

    Givens rotations zero the subdiagonal; column k of RQ is complete as soon
    as rotation k is known, so diag/subdiag are written one step behind.
    Returns a status code; SINGULAR when a pivot of R vanishes.
    """
    n = a.shape[0]
    if n == 1:
        return OK if a[0] != 0.0 else SINGULAR
    x = a[0]
    y = b[0]
    c_prev = 1.0
    s_prev = 0.0
    for k in range(n - 1):
        bk = b[k]
        r = math.hypot(x, bk)
        if r == 0.0:
            return SINGULAR
        c = x / r
        s = bk / r
        a1 = a[k + 1]
        sup = c * y + s * a1
        x = -s * y + c * a1
        y = c * b[k + 1] if k + 1 < n - 1 else 0.0
        if k > 0:
            b[k - 1] = s_prev * r
        a[k] = c * c_prev * r + s * sup
        c_prev = c
        s_prev = s
    if x == 0.0:
        return SINGULAR
    # R_nn < 0 is fixed by the similarity diag(1,..,1,-1)
    b[n - 2] = s_prev * abs(x)
    a[n - 1] = c_prev * x
    return OK


def tridiag_qr_step_np(a, b):
    n = a.shape[0]
    if n == 1:
        return OK if a[0] != 0.0 else SINGULAR
    M = np.diag(a) + np.diag(b, 1) + np.diag(b, -1)
    Q = qr_householder_np(M)
    R = M
    if np.any(np.diag(R) == 0.0):
        return SINGULAR
    N = R @ Q
    a[:] = np.diag(N)
    b[:] = 0.5 * (np.diag(N, -1) + np.diag(N, 1))
    return OK


@njit
def tridiag_qr_deflate_nb(a, b, eps, max_iter):
    """Iterate QR steps until some |b_k| < eps.

    Returns (iterations, k_hat, status); k_hat is 1-based, -1 if not halted.
    """
    n = a.shape[0]
    m = 0
    while True:
        best = np.inf
        kbest = -1
        for k in range(n - 1):
            if abs(b[k]) < best:
                best = abs(b[k])
                kbest = k
        if best < eps:
            return m, kbest + 1, OK
        if m >= max_iter:
            return m, -1, NOT_CONVERGED
        st = tridiag_qr_step_nb(a, b)
        if st != OK:
            return m, -1, st
        m += 1


def tridiag_qr_deflate_np(a, b, eps, max_iter):
    m = 0
    while True:
        mags = np.abs(b)
        k = int(np.argmin(mags))
        if mags[k] < eps:
            return m, k + 1, OK
        if m >= max_iter:
            return m, -1, NOT_CONVERGED
        st = tridiag_qr_step_np(a, b)
        if st != OK:
            return m, -1, st
        m += 1


# ---------------------------------------------------------------------------
# Toda lattice in (a, log b) variables, classical RK4
# ---------------------------------------------------------------------------

@njit
def _lattice_rhs_nb(a, lb, da, dl):
    n = a.shape[0]
    prev = 0.0
    for k in range(n - 1):
        e2 = math.exp(2.0 * lb[k])
        da[k] = 2.0 * (e2 - prev)
        prev = e2
        dl[k] = a[k + 1] - a[k]
    da[n - 1] = -2.0 * prev


@njit
def toda_lattice_advance_nb(a, lb, h, nsteps):
    """Advance the Toda lattice ``nsteps`` RK4 steps of size h, in place."""
    n = a.shape[0]
    if n < 2:
        return
    ka = np.empty((4, n))
    kl = np.empty((4, n - 1))
    ta = np.empty(n)
    tl = np.empty(n - 1)
    for _ in range(nsteps):
        _lattice_rhs_nb(a, lb, ka[0], kl[0])
        for i in range(n):
            ta[i] = a[i] + 0.5 * h * ka[0, i]
        for i in range(n - 1):
            tl[i] = lb[i] + 0.5 * h * kl[0, i]
        _lattice_rhs_nb(ta, tl, ka[1], kl[1])
        for i in range(n):
            ta[i] = a[i] + 0.5 * h * ka[1, i]
        for i in range(n - 1):
            tl[i] = lb[i] + 0.5 * h * kl[1, i]
        _lattice_rhs_nb(ta, tl, ka[2], kl[2])
        for i in range(n):
            ta[i] = a[i] + h * ka[2, i]
        for i in range(n - 1):
            tl[i] = lb[i] + h * kl[2, i]
        _lattice_rhs_nb(ta, tl, ka[3], kl[3])
        for i in range(n):
            a[i] += h / 6.0 * (ka[0, i] + 2.0 * ka[1, i] + 2.0 * ka[2, i] + ka[3, i])
        for i in range(n - 1):
            lb[i] += h / 6.0 * (kl[0, i] + 2.0 * kl[1, i] + 2.0 * kl[2, i] + kl[3, i])


def _lattice_rhs_np(a, lb):
    e2 = np.exp(2.0 * lb)
    da = np.empty_like(a)
    da[:-1] = 2.0 * e2
    da[-1] = 0.0
    da[1:] -= 2.0 * e2
    return da, np.diff(a)


def toda_lattice_advance_np(a, lb, h, nsteps):
    if a.shape[0] < 2:
        return
    for _ in range(nsteps):
        ka1, kl1 = _lattice_rhs_np(a, lb)
        ka2, kl2 = _lattice_rhs_np(a + 0.5 * h * ka1, lb + 0.5 * h * kl1)
        ka3, kl3 = _lattice_rhs_np(a + 0.5 * h * ka2, lb + 0.5 * h * kl2)
        ka4, kl4 = _lattice_rhs_np(a + h * ka3, lb + h * kl3)
        a += h / 6.0 * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4)
        lb += h / 6.0 * (kl1 + 2.0 * kl2 + 2.0 * kl3 + kl4)


@njit
def _monitor_nb(lb, first_only):
    if first_only:
        return lb[0]
    return lb.min()


@njit
def toda_lattice_scan_nb(a, lb, log_eps, coarse_dt, nsub, max_coarse, first_only):
    """March coarse steps until the monitored log b drops below log_eps.

    On return (a, lb) hold the state at the start of the crossing step and
    the number of completed coarse steps is returned; -1 if never crossed.
    """
    h = coarse_dt / nsub
    ta = a.copy()
    tl = lb.copy()
    for i in range(max_coarse):
        ta[:] = a
        tl[:] = lb
        toda_lattice_advance_nb(ta, tl, h, nsub)
        if _monitor_nb(tl, first_only) < log_eps:
            return i
        a[:] = ta
        lb[:] = tl
    return -1


def toda_lattice_scan_np(a, lb, log_eps, coarse_dt, nsub, max_coarse, first_only):
    h = coarse_dt / nsub
    for i in range(max_coarse):
        ta = a.copy()
        tl = lb.copy()
        toda_lattice_advance_np(ta, tl, h, nsub)
        mon = tl[0] if first_only else tl.min()
        if mon < log_eps:
            return i
        a[:] = ta
        lb[:] = tl
    return -1


# ---------------------------------------------------------------------------
# Off-diagonal block norms for every split point
# ---------------------------------------------------------------------------

@njit
def block_norms_nb(M):
    """Frobenius norms of M[:k, k:] for k = 1..n-1 (additions only)."""
    n = M.shape[0]
    suffix = np.zeros((n, n + 1))
    for i in range(n):
        acc = 0.0
        for j in range(n - 1, -1, -1):
            acc += M[i, j] * M[i, j]
            suffix[i, j] = acc
    out = np.empty(n - 1)
    for k in range(1, n):
        acc = 0.0
        for i in range(k):
            acc += suffix[i, k]
        out[k - 1] = math.sqrt(acc)
    return out


def block_norms_np(M):
    sq = np.abs(M) ** 2
    suffix = np.cumsum(sq[:, ::-1], axis=1)[:, ::-1]
    stacked = np.cumsum(suffix, axis=0)
    k = np.arange(1, M.shape[0])
    return np.sqrt(stacked[k - 1, k])


# ---------------------------------------------------------------------------
# Patience sorting
# ---------------------------------------------------------------------------

@njit
def lis_patience_nb(p):
    n = p.shape[0]
    tops = np.empty(n, dtype=p.dtype)
    piles = 0
    for i in range(n):
        x = p[i]
        lo = 0
        hi = piles
        while lo < hi:
            mid = (lo + hi) // 2
            if tops[mid] < x:
                lo = mid + 1
            else:
                hi = mid
        tops[lo] = x
        if lo == piles:
            piles += 1
    return piles


def lis_patience_np(p):
    tops = []
    for x in p.tolist():
        i = bisect_left(tops, x)
        if i == len(tops):
            tops.append(x)
        else:
            tops[i] = x
    return len(tops)


if USE_NUMBA:
    householder_tridiag = householder_tridiag_nb
    tql = tql_nb
    qr_householder = qr_householder_nb
    tridiag_qr_step = tridiag_qr_step_nb
    tridiag_qr_deflate = tridiag_qr_deflate_nb
    toda_lattice_advance = toda_lattice_advance_nb
    toda_lattice_scan = toda_lattice_scan_nb
    block_norms = block_norms_nb
    lis_patience = lis_patience_nb
else:
    householder_tridiag = householder_tridiag_np
    tql = tql_np
    qr_householder = qr_householder_np
    tridiag_qr_step = tridiag_qr_step_np
    tridiag_qr_deflate = tridiag_qr_deflate_np
    toda_lattice_advance = toda_lattice_advance_np
    toda_lattice_scan = toda_lattice_scan_np
    block_norms = block_norms_np
    lis_patience = lis_patience_np

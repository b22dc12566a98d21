"""Compiled and numpy kernel variants must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from todaqr import kernels


def _sym(rng, n):
    A = rng.standard_normal((n, n))
    return (A + A.T) / 2


@pytest.mark.parametrize("n", [1, 2, 5, 12])
def test_householder_variants(n):
    M = _sym(np.random.default_rng(n), n)
    A1, A2 = M.copy(), M.copy()
    Q1 = kernels.householder_tridiag_nb(A1)
    Q2 = kernels.householder_tridiag_np(A2)
    assert np.allclose(A1, A2, atol=1e-12)
    assert np.allclose(Q1, Q2, atol=1e-12)
    assert np.allclose(Q1 @ A1 @ Q1.T, M, atol=1e-12)


def test_tql_variants():
    rng = np.random.default_rng(0)
    n = 10
    d, e = rng.standard_normal(n), np.append(rng.standard_normal(n - 1), 0.0)
    out = []
    for f in (kernels.tql_nb, kernels.tql_np):
        dd, ee, Z = d.copy(), e.copy(), np.eye(n)
        assert f(dd, ee, Z, True, 500) == kernels.OK
        order = np.argsort(dd)
        out.append((dd[order], np.abs(Z[:, order])))
    assert np.allclose(out[0][0], out[1][0], atol=1e-13)
    assert np.allclose(out[0][1], out[1][1], atol=1e-10)


def test_qr_householder_variants():
    A = np.random.default_rng(1).standard_normal((7, 7))
    R1, R2 = A.copy(), A.copy()
    Q1 = kernels.qr_householder_nb(R1)
    Q2 = kernels.qr_householder_np(R2)
    assert np.allclose(Q1, Q2, atol=1e-12)
    assert np.allclose(np.triu(R1), np.triu(R2), atol=1e-12)


def test_tridiagonal_qr_variants():
    rng = np.random.default_rng(2)
    a, b = rng.standard_normal(8) + 4, rng.standard_normal(7)
    a1, b1, a2, b2 = a.copy(), b.copy(), a.copy(), b.copy()
    assert kernels.tridiag_qr_step_nb(a1, b1) == kernels.tridiag_qr_step_np(a2, b2) == kernels.OK
    assert np.allclose(a1, a2, atol=1e-13) and np.allclose(b1, b2, atol=1e-13)
    r1 = kernels.tridiag_qr_deflate_nb(a.copy(), b.copy(), 1e-10, 10_000)
    r2 = kernels.tridiag_qr_deflate_np(a.copy(), b.copy(), 1e-10, 10_000)
    assert tuple(r1) == tuple(r2)


def test_toda_lattice_variants():
    rng = np.random.default_rng(3)
    a, lb = rng.standard_normal(6), np.log(np.abs(rng.standard_normal(5)))
    a1, l1, a2, l2 = a.copy(), lb.copy(), a.copy(), lb.copy()
    kernels.toda_lattice_advance_nb(a1, l1, 1e-3, 500)
    kernels.toda_lattice_advance_np(a2, l2, 1e-3, 500)
    assert np.allclose(a1, a2, atol=1e-12) and np.allclose(l1, l2, atol=1e-12)
    a1, l1, a2, l2 = a.copy(), lb.copy(), a.copy(), lb.copy()
    i1 = kernels.toda_lattice_scan_nb(a1, l1, np.log(1e-6), 0.05, 10, 10_000, False)
    i2 = kernels.toda_lattice_scan_np(a2, l2, np.log(1e-6), 0.05, 10, 10_000, False)
    assert i1 == i2 > 0
    assert np.allclose(a1, a2, atol=1e-10)


def test_block_norms_variants():
    M = _sym(np.random.default_rng(4), 9)
    brute = [np.sqrt(np.sum(M[:k, k:] ** 2)) for k in range(1, 9)]
    assert np.allclose(kernels.block_norms_nb(M), brute, atol=1e-13)
    assert np.allclose(kernels.block_norms_np(M), brute, atol=1e-13)


def test_lis_variants():
    rng = np.random.default_rng(5)
    for n in (1, 2, 50, 400):
        p = rng.permutation(n) + 1
        assert kernels.lis_patience_nb(p) == kernels.lis_patience_np(p)


def test_disable_flag_selects_numpy():
    env = dict(os.environ, TODAQR_DISABLE_NUMBA="1")
    code = (
        "import numpy as np\n"
        "from todaqr import backend, kernels\n"
        "from todaqr.linalg import symmetric_eigen\n"
        "from todaqr.ulam import lis_length\n"
        "assert backend() == 'numpy'\n"
        "assert kernels.lis_patience is kernels.lis_patience_np\n"
        "assert lis_length([3, 1, 5, 6, 2, 4]) == 3\n"
        "print(symmetric_eigen(np.array([[2.0, 1.0], [1.0, 2.0]])).values)\n"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, timeout=300)
    assert out.returncode == 0, out.stderr
    assert "[1. 3.]" in out.stdout

import math
import warnings
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from todaqr.deflation import (
    ScalingRegionWarning,
    block_offdiag_norm,
    block_profile,
    check_scaling_region,
    central_histogram,
    deflated_blocks,
    deflation_time_discrete,
    deflation_time_toda,
    gap_statistic_experiment,
    ks_distance,
    normalize_times,
    one_deflation_time,
    universality_experiment,
)
from todaqr.ensembles import EnsembleSpec
from todaqr.errors import DegenerateSampleError, NonHaltingError, SingularMatrixError
from todaqr.flows import g_flow, qr_step, toda_flow_rk4
from todaqr.linalg import TridiagonalMatrix, symmetric_eigen


def _config(**kw):
    base = dict(algorithm="QR", ensembles=["GOE", "BernoulliWigner"], N=20, epsilon=1e-10, trials=30,
                master_seed=7, max_iter=10_000, t_max=1000.0, coarse_dt=0.05, reduction="none", bins=10,
                workers=1, sigma=0.1)
    base.update(kw)
    return SimpleNamespace(**base)


def test_block_norm_examples():
    assert block_offdiag_norm(np.diag([1.0, 2.0, 3.0]), 1) == 0.0
    assert block_offdiag_norm(np.array([[0.0, -3.0], [-3.0, 0.0]]), 1) == 3.0
    rng = np.random.default_rng(0)
    M = rng.standard_normal((5, 5))
    M = M + M.T
    brute = math.sqrt(sum(M[i, j] ** 2 for i in range(2) for j in range(2, 5)))
    assert block_offdiag_norm(M, 2) == pytest.approx(brute, rel=1e-14)
    assert np.allclose(block_profile(M), [block_offdiag_norm(M, k) for k in range(1, 5)])


def test_discrete_diagonal_is_instant():
    rec = deflation_time_discrete(np.diag([3.0, 1.0, 2.0]))
    assert rec.T == 0


def test_discrete_fixed_point_never_halts():
    with pytest.raises(NonHaltingError) as info:
        deflation_time_discrete(np.array([[0.0, 1.0], [1.0, 0.0]]), max_iter=200)
    assert info.value.steps == 200


def test_discrete_singular_rejected():
    with pytest.raises(SingularMatrixError):
        deflation_time_discrete(np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_discrete_deflated_blocks_match_oracle():
    T = TridiagonalMatrix([4.0, -2.0, 1.0, 0.5], [1.0, 0.7, 0.3]).to_dense()
    rec = deflation_time_discrete(T, epsilon=1e-8)
    X = T
    for _ in range(int(rec.T)):
        X = qr_step(X)
    assert abs(X[rec.k_hat, rec.k_hat - 1]) < 1e-8
    assert rec.d_T < 1e-8
    got = np.sort(deflated_blocks(X, rec.k_hat))
    assert np.allclose(got, symmetric_eigen(T).values, atol=1e-8)


def test_discrete_dense_and_tridiagonal_paths_agree():
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal(6), rng.standard_normal(5)
    T = TridiagonalMatrix(a, b).to_dense()
    fast = deflation_time_discrete(T, epsilon=1e-9)
    generic = deflation_time_discrete(T, step=qr_step, epsilon=1e-9)
    assert (fast.T, fast.k_hat) == (generic.T, generic.k_hat)


def test_toda_diagonal_is_instant():
    assert deflation_time_toda(np.diag([1.0, 2.0])).T == 0


def test_toda_2x2_crossing():
    M0 = np.array([[0.0, 1.0], [1.0, 0.0]])
    eps = 1e-4
    rec = deflation_time_toda(M0, epsilon=eps)
    # independent oracle: scan |b(t)| on a 1e-3 grid integrated by RK4
    M, t, h = M0.copy(), 0.0, 1e-3
    while abs(M[0, 1]) >= eps:
        M = toda_flow_rk4(M, h, dt=h)
        t += h
    scan = t
    assert rec.T == pytest.approx(scan, rel=1e-3)
    assert rec.T == pytest.approx(math.acosh(1 / eps) / 2, rel=1e-9)
    assert eps * (1 - 1e-3) <= rec.d_T <= eps * (1 + 1e-3)


def test_toda_lattice_matches_factorization():
    rng = np.random.default_rng(2)
    T = TridiagonalMatrix(rng.standard_normal(8), np.abs(rng.standard_normal(7)) + 0.1).to_dense()
    a = deflation_time_toda(T, 1e-8)
    b = deflation_time_toda(T, 1e-8, method="lattice")
    assert a.k_hat == b.k_hat
    assert a.T == pytest.approx(b.T, rel=1e-5)


def test_one_deflation():
    D = np.diag([2.0, 5.0, -1.0])
    res = one_deflation_time(D)
    assert res.T1 == 0 and res.top_entry == 2.0
    M0 = EnsembleSpec("GOE", 20, seed=3).sample(0)
    res = one_deflation_time(M0, 1e-6)
    assert res.residual < 1e-6
    assert res.lambda_max == pytest.approx(np.linalg.eigvalsh(M0)[-1], abs=1e-12)
    assert one_deflation_time(M0, 1e-4).T1 <= one_deflation_time(M0, 1e-8).T1


def test_one_deflation_matches_dense_flow():
    M0 = EnsembleSpec("GOE", 8, seed=4).sample(1)
    res = one_deflation_time(M0, 1e-6)
    X = g_flow(M0, res.T1)
    assert np.linalg.norm(X[0, 1:]) == pytest.approx(1e-6, rel=1e-6)
    assert X[0, 0] == pytest.approx(res.top_entry, abs=1e-10)


def test_normalize_times():
    # sample sd of (0, 2) with the 1/(n-1) convention is sqrt(2)
    assert np.allclose(normalize_times([0.0, 2.0]), [-1 / math.sqrt(2), 1 / math.sqrt(2)])
    rng = np.random.default_rng(5)
    x = rng.exponential(size=100)
    z = normalize_times(x)
    assert abs(z.mean()) < 1e-12 and abs(z.var(ddof=1) - 1) < 1e-12
    assert np.allclose(normalize_times(3 * x + 7), z, atol=1e-12)
    with pytest.raises(DegenerateSampleError):
        normalize_times([1.0, 1.0, 1.0])


def test_ks_distance():
    x = np.random.default_rng(6).standard_normal(50)
    assert ks_distance(x, x) == 0
    assert ks_distance([0.1, 0.5, 0.9], [2.1, 2.5]) == 1
    rng = np.random.default_rng(7)
    assert ks_distance(rng.standard_normal(10_000), rng.standard_normal(10_000)) < 0.03


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=40),
       st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=40))
@settings(max_examples=100, deadline=None)
def test_ks_matches_scipy(a, b):
    from scipy.stats import ks_2samp
    assert ks_distance(a, b) == pytest.approx(ks_2samp(a, b, method="asymp").statistic, abs=1e-12)
    assert ks_distance(a, b) == ks_distance(b, a)


def test_central_histogram_common_edges():
    rng = np.random.default_rng(8)
    samples = {"a": rng.standard_normal(1000), "b": rng.standard_normal(500)}
    edges, hist = central_histogram(samples, bins=20)
    assert edges.size == 21
    assert hist["a"].sum() >= 0.98 * 1000


def test_universality_small():
    cfg = _config()
    r1 = universality_experiment(cfg)
    r2 = universality_experiment(cfg, workers=2)
    for name in ("GOE", "BernoulliWigner"):
        z = r1.normalized[name]
        assert abs(z.mean()) < 1e-12 and abs(z.var(ddof=1) - 1) < 1e-12
        assert [r.T for r in r1.records[name]] == [r.T for r in r2.records[name]]
    assert set(r1.ks) == {"GOE|BernoulliWigner"}


def test_universality_toda_small():
    r = universality_experiment(_config(algorithm="Toda", epsilon=1e-6, trials=10, N=10))
    assert r.non_halting == {"GOE": 0, "BernoulliWigner": 0}


def test_scaling_region():
    L, ok = check_scaling_region(1e-16, 10_000)
    assert L == pytest.approx(4.0) and ok
    with pytest.warns(ScalingRegionWarning):
        L, ok = check_scaling_region(1e-1, 100)
    assert L == pytest.approx(0.5) and not ok


def test_gap_statistic_small():
    cfg = _config(ensembles=["GOE"], N=20, epsilon=1e-8, trials=60)
    with warnings.catch_warnings():
        warnings.simplefilter("error", ScalingRegionWarning)
        res = gap_statistic_experiment(cfg)
    assert res.top_entry_violations == 0
    assert res.spearman > 0.8

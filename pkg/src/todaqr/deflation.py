"""Deflation times for shiftless QR and Toda, and the Monte Carlo studies built on them."""
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, List, NamedTuple, Union

import numpy as np
from scipy import stats

from . import kernels
from .ensembles import Ensemble, EnsembleSpec
from .errors import DegenerateSampleError, NonHaltingError, SingularMatrixError
from .flows import EigenbasisFlow, lattice_step_size, orthogonal_factor
from .linalg import TridiagonalMatrix, check_symmetric, householder_tridiagonalize, is_tridiagonal, symmetric_eigen
from .parallel import map_trials


class ScalingRegionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DeflationRecord:
    trial: int
    T: float
    k_hat: int
    top_gap: float
    epsilon: float
    d_T: float = math.nan  # smallest off-diagonal block norm at T

    def __post_init__(self):
        if self.T < 0 or self.top_gap < 0 or self.k_hat < 1:
            raise ValueError(f"invalid deflation record {self}")


# ---------------------------------------------------------------------------
# Block norms
# ---------------------------------------------------------------------------

def block_offdiag_norm(M, k):
    """Frobenius norm of the k x (n-k) upper-right block of M."""
    M = np.asarray(M)
    n = M.shape[0]
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, {n - 1}], got {k}")
    return float(np.sqrt(np.sum(np.abs(M[:k, k:]) ** 2)))


def block_profile(M):
    """Block norms for every split k = 1..n-1."""
    M = np.ascontiguousarray(M, dtype=float)
    if is_tridiagonal(M):
        return np.abs(np.diag(M, -1)).copy()
    return kernels.block_norms(M)


def top_gap(M):
    values = symmetric_eigen(M).values
    return float(values[-1] - values[-2]) if values.size > 1 else 0.0


def _first_below(profile, eps):
    """(k_hat, value) for the smallest k with the minimal norm, or None if min >= eps."""
    k = int(np.argmin(profile))
    return (k + 1, float(profile[k])) if profile[k] < eps else None


# ---------------------------------------------------------------------------
# Discrete algorithms
# ---------------------------------------------------------------------------

def fast_qr_step(X):
    """Unshifted QR step RQ on a dense symmetric matrix through LAPACK."""
    Q, R = np.linalg.qr(X)
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    out = (R * signs[:, None]) @ (Q * signs)
    return 0.5 * (out + out.T)


def _require_invertible(M):
    # same threshold as qr_factorize: |R_ii| < 1e-14 ||M||_F
    R = np.linalg.qr(M, mode="r")
    scale = np.linalg.norm(M)
    if scale == 0 or np.min(np.abs(np.diag(R))) < 1e-14 * scale:
        raise SingularMatrixError("QR deflation needs det M0 != 0")


def deflation_time_discrete(M0, step: Union[str, Callable] = "QR", epsilon=1e-10, max_iter=10_000,
                            trial=0):
    """Smallest m with min_k ||X_m[:k, k:]||_F < epsilon, where X_{m+1} = step(X_m).

    ``step='QR'`` is unshifted QR (a Givens kernel on tridiagonal input,
    LAPACK on dense input); any callable on matrices may be supplied.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    M0 = np.asarray(check_symmetric(M0), dtype=float)
    n = M0.shape[0]
    if n < 2:
        raise ValueError("deflation needs n >= 2")
    gap = top_gap(M0)
    if step == "QR":
        _require_invertible(M0)
        if is_tridiagonal(M0):
            a, b = np.diag(M0).copy(), np.diag(M0, -1).copy()
            m, k_hat, status = kernels.tridiag_qr_deflate(a, b, float(epsilon), int(max_iter))
            if status == kernels.SINGULAR:
                raise SingularMatrixError(f"QR step hit a zero pivot at iteration {m}")
            if status == kernels.NOT_CONVERGED:
                raise NonHaltingError(f"no deflation within {max_iter} QR steps", m, np.abs(b))
            return DeflationRecord(trial, float(m), int(k_hat), gap, float(epsilon), float(abs(b[k_hat - 1])))
        step = fast_qr_step
    X = M0
    for m in range(max_iter + 1):
        profile = block_profile(X)
        hit = _first_below(profile, epsilon)
        if hit is not None:
            return DeflationRecord(trial, float(m), hit[0], gap, float(epsilon), hit[1])
        if m == max_iter:
            raise NonHaltingError(f"no deflation within {max_iter} steps", m, profile)
        X = step(X)
    raise AssertionError("unreachable")


def deflated_blocks(X, k):
    """Spectra of the two diagonal blocks after splitting X at k."""
    return np.concatenate([symmetric_eigen(X[:k, :k]).values, symmetric_eigen(X[k:, k:]).values])


# ---------------------------------------------------------------------------
# Toda deflation
# ---------------------------------------------------------------------------

def _bisect(value_at, lo, hi, eps, bisections):
    """Shrink [lo, hi] with value(lo) >= eps > value(hi); return hi and its value."""
    v_hi = value_at(hi)
    for _ in range(bisections):
        mid = 0.5 * (lo + hi)
        v = value_at(mid)
        if v < eps:
            hi, v_hi = mid, v
        else:
            lo = mid
    return hi, v_hi


def _toda_dense(M0, eps, t_max, coarse_dt, bisections):
    flow = EigenbasisFlow(M0)
    scale = np.exp(coarse_dt * flow.rates)[:, None]
    steps = int(math.ceil(t_max / coarse_dt))
    for i in range(steps):
        checkpoint = flow.W
        W_next = orthogonal_factor(scale * checkpoint)
        X = W_next.T @ (flow.lam[:, None] * W_next)
        if block_profile(X).min() < eps:
            def d_at(s, W0=checkpoint):
                W = orthogonal_factor(np.exp(s * flow.rates)[:, None] * W0)
                return _monitor(W.T @ (flow.lam[:, None] * W))
            t0 = i * coarse_dt
            s, _ = _bisect(lambda s: d_at(s)[1], 0.0, coarse_dt, eps, bisections)
            k_hat, d = d_at(s)
            return t0 + s, k_hat, d
        flow.W = W_next
    profile = block_profile(flow.W.T @ (flow.lam[:, None] * flow.W))
    raise NonHaltingError(f"Toda flow did not deflate by t = {t_max}", steps, profile)


def _monitor(X):
    profile = block_profile(0.5 * (X + X.T))
    k = int(np.argmin(profile))
    return k + 1, float(profile[k])


def _toda_lattice(M0, eps, t_max, coarse_dt, bisections):
    a = np.diag(M0).copy()
    with np.errstate(divide="ignore"):
        lb = np.log(np.abs(np.diag(M0, -1)))
    h = lattice_step_size(TridiagonalMatrix(a, np.exp(lb)))
    nsub = max(1, int(math.ceil(coarse_dt / h)))
    steps = int(math.ceil(t_max / coarse_dt))
    i = kernels.toda_lattice_scan(a, lb, math.log(eps), coarse_dt, nsub, steps, False)
    if i < 0:
        raise NonHaltingError(f"Toda flow did not deflate by t = {t_max}", steps, np.exp(lb))

    def state_at(s):
        ta, tl = a.copy(), lb.copy()
        if s > 0:
            n = max(1, int(math.ceil(s / h)))
            kernels.toda_lattice_advance(ta, tl, s / n, n)
        return tl

    s, _ = _bisect(lambda s: math.exp(state_at(s).min()), 0.0, coarse_dt, eps, bisections)
    tl = state_at(s)
    return i * coarse_dt + s, int(np.argmin(tl)) + 1, math.exp(tl.min())


def deflation_time_toda(M0, epsilon=1e-8, t_max=1000.0, coarse_dt=0.05, trial=0, bisections=40,
                        method="factorization"):
    """First flow time at which min_k ||M(t)[:k, k:]||_F drops below epsilon.

    The flow is sampled every ``coarse_dt``; the first coarse interval that
    ends below epsilon is bisected ``bisections`` times.  ``method='lattice'``
    integrates the Jacobi-matrix lattice with RK4 and needs tridiagonal input.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    M0 = np.asarray(check_symmetric(M0), dtype=float)
    if M0.shape[0] < 2:
        raise ValueError("deflation needs n >= 2")
    gap = top_gap(M0)
    hit = _first_below(block_profile(M0), epsilon)
    if hit is not None:
        return DeflationRecord(trial, 0.0, hit[0], gap, float(epsilon), hit[1])
    if method == "lattice":
        if not is_tridiagonal(M0):
            raise ValueError("the lattice integrator needs a tridiagonal matrix")
        T, k_hat, d = _toda_lattice(M0, epsilon, t_max, coarse_dt, bisections)
    elif method == "factorization":
        T, k_hat, d = _toda_dense(M0, epsilon, t_max, coarse_dt, bisections)
    else:
        raise ValueError(f"unknown method {method!r}")
    return DeflationRecord(trial, float(T), int(k_hat), gap, float(epsilon), float(d))


class OneDeflation(NamedTuple):
    T1: float
    top_entry: float
    lambda_max: float  # from the independent eigensolver

    @property
    def residual(self):
        return abs(self.top_entry - self.lambda_max)


class _FirstRowFlow:
    """X_11(t) and E(t) = sum_{j>=2} X_1j(t)^2 from the spectral measure at e_1.

    The first column of Q(t) is exp(t M0) e_1 normalised, so with
    M0 = V diag(lam) V^T and p_i proportional to V_1i^2 exp(2 t lam_i),
    X_11 = sum p_i lam_i and E = sum p_i (lam_i - X_11)^2.
    """

    def __init__(self, M0):
        lam, V = np.linalg.eigh(M0)
        self.lam = lam
        self.w = V[0] ** 2
        self.top = lam.max()

    def at(self, t):
        with np.errstate(under="ignore"):
            p = self.w * np.exp(2.0 * t * (self.lam - self.top))
        p /= p.sum()
        x11 = float(p @ self.lam)
        return x11, float(p @ (self.lam - x11) ** 2)


def one_deflation_time(M0, epsilon=1e-8, t_max=1000.0, coarse_dt=0.05, bisections=40):
    """First Toda time with sum_{j>=2} X_1j^2 < epsilon^2, and X_11 there."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    M0 = np.asarray(check_symmetric(M0), dtype=float)
    lam_max = float(symmetric_eigen(M0).values[-1])
    eps2 = float(epsilon) ** 2
    first = np.asarray(M0[0, 1:])
    if float(first @ first) < eps2:
        return OneDeflation(0.0, float(M0[0, 0]), lam_max)
    flow = _FirstRowFlow(M0)
    steps = int(math.ceil(t_max / coarse_dt))
    for i in range(steps):
        if flow.at((i + 1) * coarse_dt)[1] < eps2:
            t0 = i * coarse_dt
            s, _ = _bisect(lambda s: flow.at(t0 + s)[1], 0.0, coarse_dt, eps2, bisections)
            return OneDeflation(t0 + s, flow.at(t0 + s)[0], lam_max)
    raise NonHaltingError(f"E(t) stayed above epsilon^2 up to t = {t_max}", steps)


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

def normalize_times(samples):
    """(T - mean) / sd with the 1/(n-1) sample variance."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise DegenerateSampleError("need at least two samples to normalise")
    sd = x.std(ddof=1)
    if not sd > 0:
        raise DegenerateSampleError("samples have zero variance")
    z = (x - x.mean()) / sd
    # one re-centring pass removes the residual rounding in the mean
    return z - z.mean()


def ks_distance(a, b):
    """Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("samples must be non-empty")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def central_histogram(samples: Dict[str, np.ndarray], bins=40, coverage=0.99):
    """Common bin edges over the central ``coverage`` of the pooled samples."""
    pooled = np.concatenate([np.asarray(s, dtype=float) for s in samples.values()])
    tail = 0.5 * (1.0 - coverage)
    lo, hi = np.quantile(pooled, [tail, 1.0 - tail])
    if hi <= lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    counts = {name: np.histogram(s, bins=edges)[0] for name, s in samples.items()}
    return edges, counts


# ---------------------------------------------------------------------------
# Universality experiment
# ---------------------------------------------------------------------------

@dataclass
class UniversalityResult:
    algorithm: str
    records: Dict[str, List[DeflationRecord]]
    normalized: Dict[str, np.ndarray]
    means: Dict[str, float]
    variances: Dict[str, float]
    bin_edges: np.ndarray
    histograms: Dict[str, np.ndarray]
    ks: Dict[str, float]
    non_halting: Dict[str, int]
    failures: Dict[str, List[dict]] = field(default_factory=dict)


def _prepare(M, reduction):
    if reduction == "tridiagonal":
        T, _ = householder_tridiagonalize(M)
        return T.to_dense()
    return M


def _deflation_trial(job):
    """Run one trial; returns ('ok', record) or ('nonhalt', info)."""
    algorithm, kind, N, seed, trial, eps, max_iter, t_max, coarse_dt, reduction = job
    M = _prepare(EnsembleSpec(kind, N, seed).sample(trial), reduction)
    try:
        if algorithm == "QR":
            rec = deflation_time_discrete(M, "QR", eps, max_iter, trial=trial)
        else:
            method = "lattice" if reduction == "tridiagonal" else "factorization"
            rec = deflation_time_toda(M, eps, t_max, coarse_dt, trial=trial, method=method)
    except (NonHaltingError, SingularMatrixError) as exc:
        return "nonhalt", {"trial": trial, "reason": str(exc)}
    return "ok", rec


def pair_key(a, b):
    return f"{a}|{b}"


def universality_experiment(config, workers=None):
    """Deflation times per ensemble, normalised, histogrammed and compared by KS."""
    workers = config.workers if workers is None else workers
    records, normalized, failures = {}, {}, {}
    for name in config.ensembles:
        kind = Ensemble.parse(name)
        jobs = [
            (config.algorithm, kind, config.N, config.master_seed, i, config.epsilon,
             config.max_iter, config.t_max, config.coarse_dt, config.reduction)
            for i in range(config.trials)
        ]
        results = map_trials(_deflation_trial, jobs, workers)
        records[kind.value] = [r for tag, r in results if tag == "ok"]
        failures[kind.value] = [r for tag, r in results if tag != "ok"]
        normalized[kind.value] = normalize_times([r.T for r in records[kind.value]])
    means = {k: float(np.mean([r.T for r in v])) for k, v in records.items()}
    variances = {k: float(np.var([r.T for r in v], ddof=1)) for k, v in records.items()}
    edges, hist = central_histogram(normalized, config.bins)
    names = list(normalized)
    ks = {
        pair_key(a, b): ks_distance(normalized[a], normalized[b])
        for i, a in enumerate(names) for b in names[i + 1:]
    }
    return UniversalityResult(
        config.algorithm, records, normalized, means, variances, edges, hist, ks,
        {k: len(v) for k, v in failures.items()}, failures,
    )


# ---------------------------------------------------------------------------
# Gap law for T^(1)
# ---------------------------------------------------------------------------

def scaling_exponent(epsilon, N):
    """L = log(1/epsilon) / log N."""
    return math.log(1.0 / epsilon) / math.log(N)


def check_scaling_region(epsilon, N, sigma=0.1):
    """(L, accepted); warns with :class:`ScalingRegionWarning` when L < 5/3 + sigma/2."""
    if not 0 < epsilon < 1 or N < 2:
        raise ValueError("need 0 < epsilon < 1 and N >= 2")
    L = scaling_exponent(epsilon, N)
    accepted = L >= 5.0 / 3.0 + sigma / 2.0
    if not accepted:
        warnings.warn(
            f"log(1/eps)/log N = {L:.3f} is below 5/3 + sigma/2 = {5 / 3 + sigma / 2:.3f}",
            ScalingRegionWarning,
            stacklevel=2,
        )
    return L, accepted


def scaled_deflation_time(T1, N, epsilon):
    return np.asarray(T1) / (N ** (2.0 / 3.0) * (math.log(1.0 / epsilon) - 2.0 / 3.0 * math.log(N)))


def scaled_inverse_gap(gap, N):
    return 1.0 / (2.0 ** (-2.0 / 3.0) * N ** (2.0 / 3.0) * np.asarray(gap))


def median_matched_ks(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return ks_distance(a / np.median(a), b / np.median(b))


@dataclass
class GapLawResult:
    T1: np.ndarray
    top_entry: np.ndarray
    lambda_max: np.ndarray
    gaps: np.ndarray
    scaled_T1: np.ndarray
    scaled_inverse_gap: np.ndarray
    ks: float
    spearman: float
    scaling_exponent: float
    accepted: bool
    non_halting: int
    top_entry_violations: int


def _gap_trial(job):
    kind, N, seed, trial, eps, t_max, coarse_dt = job
    M = EnsembleSpec(kind, N, seed).sample(trial)
    values = symmetric_eigen(M).values
    gap = float(values[-1] - values[-2])
    try:
        one = one_deflation_time(M, eps, t_max, coarse_dt)
    except NonHaltingError:
        return None
    return one.T1, one.top_entry, one.lambda_max, gap


def gap_statistic_experiment(config, workers=None):
    """T^(1) against the top gap over GOE-type trials (first listed ensemble)."""
    workers = config.workers if workers is None else workers
    L, accepted = check_scaling_region(config.epsilon, config.N, config.sigma)
    kind = Ensemble.parse(config.ensembles[0])
    jobs = [(kind, config.N, config.master_seed, i, config.epsilon, config.t_max, config.coarse_dt)
            for i in range(config.trials)]
    rows = [r for r in map_trials(_gap_trial, jobs, workers) if r is not None]
    T1, top, lam, gaps = (np.array(col) for col in zip(*rows))
    sT = scaled_deflation_time(T1, config.N, config.epsilon)
    sG = scaled_inverse_gap(gaps, config.N)
    rho = float(stats.spearmanr(T1, 1.0 / gaps)[0])
    violations = int(np.sum(np.abs(top - lam) >= config.epsilon))
    return GapLawResult(T1, top, lam, gaps, sT, sG, median_matched_ks(sT, sG), rho, L, accepted,
                        config.trials - len(rows), violations)

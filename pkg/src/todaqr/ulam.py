"""Longest increasing subsequences of uniform permutations against Tracy-Widom."""
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .ensembles import random_permutation
from .errors import PermutationError, UnsupportedSizeError
from .parallel import map_trials

BRUTEFORCE_MAX = 12


def check_permutation(p):
    p = np.asarray(p)
    if p.ndim != 1 or p.size == 0:
        raise PermutationError("a permutation is a non-empty 1-d sequence")
    if not np.issubdtype(p.dtype, np.integer):
        if not np.all(p == np.round(p)):
            raise PermutationError("permutation entries must be integers")
        p = p.astype(np.int64)
    if not np.array_equal(np.sort(p), np.arange(1, p.size + 1)):
        raise PermutationError(f"not a bijection of 1..{p.size}")
    return p.astype(np.int64)


def parse_permutation(text):
    """'315624' -> array([3, 1, 5, 6, 2, 4]); comma/space separated for n >= 10."""
    text = text.strip()
    parts = text.replace(",", " ").split()
    if len(parts) == 1 and len(text) > 1:
        parts = list(text)
    return check_permutation(np.array([int(x) for x in parts]))


def lis_length(p):
    """Length of the longest increasing subsequence by patience sorting."""
    return int(kernels.lis_patience(check_permutation(p)))


def lis_bruteforce(p):
    """O(n^2) dynamic programme over subsequence end points; n <= 12."""
    p = check_permutation(p)
    if p.size > BRUTEFORCE_MAX:
        raise UnsupportedSizeError(f"brute force limited to n <= {BRUTEFORCE_MAX}")
    best = [1] * p.size
    for j in range(p.size):
        for i in range(j):
            if p[i] < p[j] and best[i] + 1 > best[j]:
                best[j] = best[i] + 1
    return max(best)


def scaled_statistic(lengths, N):
    return (np.asarray(lengths, dtype=float) - 2.0 * math.sqrt(N)) / N ** (1.0 / 6.0)


@dataclass(frozen=True)
class LisSample:
    N: int
    lengths: np.ndarray  # in trial order
    scaled: np.ndarray  # sorted

    def ecdf(self, t):
        """Fraction of scaled samples <= t."""
        return np.searchsorted(self.scaled, np.asarray(t, dtype=float), side="right") / self.scaled.size


def _one_lis(job):
    N, seed, trial = job
    return int(kernels.lis_patience(random_permutation(N, seed, trial)))


def lis_monte_carlo(N, trials, seed=0, workers=1):
    if N < 1 or trials < 1:
        raise ValueError("need N >= 1 and trials >= 1")
    lengths = np.array(map_trials(_one_lis, [(N, seed, i) for i in range(trials)], workers))
    return LisSample(N, lengths, np.sort(scaled_statistic(lengths, N)))


@dataclass(frozen=True)
class KSComparison:
    lattice: float  # max over attainable values l of |P_emp(l_N <= l) - F(t_l)|
    sup: float  # sup over all real t of |ECDF(t) - F(t)|


def ks_against_cdf(sample, cdf, window=(-9.0, 7.0)):
    """Compare the integer-valued LIS sample with a continuous CDF.

    ``cdf`` is evaluated only on scaled lattice points inside ``window``;
    outside it the CDF is taken as 0 (left) or 1 (right).
    """
    N = sample.N
    lo = int(min(sample.lengths.min(), math.floor(2 * math.sqrt(N) + window[0] * N ** (1 / 6)))) - 1
    hi = int(max(sample.lengths.max(), math.ceil(2 * math.sqrt(N) + window[1] * N ** (1 / 6)))) + 1
    ells = np.arange(max(lo, 0), hi + 1)
    t = scaled_statistic(ells, N)
    F = np.array([cdf(x) if window[0] <= x <= window[1] else (0.0 if x < window[0] else 1.0) for x in t])
    E = sample.ecdf(t)
    # just below each lattice point the ECDF still has the previous value
    E_left = np.concatenate([[0.0], E[:-1]])
    lattice = float(np.max(np.abs(E - F)))
    sup = float(max(lattice, np.max(np.abs(E_left - F))))
    return KSComparison(lattice, sup)

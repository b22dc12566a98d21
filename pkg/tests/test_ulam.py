import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from todaqr.errors import PermutationError, UnsupportedSizeError
from todaqr.ulam import (
    KSComparison,
    check_permutation,
    ks_against_cdf,
    lis_bruteforce,
    lis_length,
    lis_monte_carlo,
    parse_permutation,
)


def test_lis_examples():
    p = parse_permutation("315624")
    assert list(p) == [3, 1, 5, 6, 2, 4]
    assert lis_length(p) == 3
    assert lis_bruteforce(p) == 3
    assert lis_length(np.arange(1, 101)) == 100
    assert lis_length(np.arange(100, 0, -1)) == 1
    assert lis_bruteforce([1]) == 1


def test_lis_exhaustive_s7():
    for p in itertools.permutations(range(1, 8)):
        assert lis_length(p) == lis_bruteforce(p)


@given(st.permutations(list(range(1, 13))))
@settings(max_examples=200, deadline=None)
def test_lis_bruteforce_agrees(p):
    assert lis_length(p) == lis_bruteforce(p)


@given(st.permutations(list(range(1, 60))))
@settings(max_examples=50, deadline=None)
def test_lis_reversal_duality(p):
    # Erdos-Szekeres: LIS * LDS >= n, and LDS(p) = LIS(reverse(p))
    p = np.array(p)
    assert lis_length(p) * lis_length(p[::-1]) >= p.size


def test_invalid_permutations():
    with pytest.raises(PermutationError):
        check_permutation([1, 2, 2])
    with pytest.raises(PermutationError):
        check_permutation([0, 1, 2])
    with pytest.raises(PermutationError):
        check_permutation([])
    with pytest.raises(UnsupportedSizeError):
        lis_bruteforce(np.arange(1, 14))


def test_monte_carlo_trivial():
    s = lis_monte_carlo(1, 10, seed=3)
    assert np.all(s.lengths == 1)
    assert np.all(s.scaled == -1.0)


def test_monte_carlo_deterministic_and_schedule_free():
    a = lis_monte_carlo(200, 40, seed=5)
    b = lis_monte_carlo(200, 40, seed=5, workers=2)
    assert np.array_equal(a.lengths, b.lengths)


def test_monte_carlo_mean_within_5pct_of_two():
    # Expected to fail: E l_N ~ 2 sqrt(N) - 1.77 N^(1/6), so at N = 400 the
    # ratio sits near 1.79, about 11% low.  Kept at the stated 5% tolerance.
    s = lis_monte_carlo(400, 1000, seed=11)
    ratio = s.lengths.mean() / math.sqrt(400)
    assert abs(ratio - 2) < 0.1, f"mean l_N / sqrt(N) = {ratio:.4f}"


def test_monte_carlo_mean_with_correction():
    s = lis_monte_carlo(400, 1000, seed=11)
    predicted = 2 * math.sqrt(400) - 1.7711 * 400 ** (1 / 6)
    assert abs(s.lengths.mean() - predicted) / predicted < 0.02


def test_ks_against_cdf_shapes():
    s = lis_monte_carlo(100, 300, seed=2)
    res = ks_against_cdf(s, lambda t: 0.5)
    assert isinstance(res, KSComparison)
    assert 0 <= res.lattice <= res.sup <= 1

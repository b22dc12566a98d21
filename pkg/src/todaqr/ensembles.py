"""Seeded random inputs: Wigner ensembles and uniform permutations.

Every sample is a pure function of ``(kind, N, seed, trial)``.  Per-trial
generators are keyed by :func:`derive_trial_seed`, a bijective 64-bit mix of
the trial counter, so trials can run in any order or in parallel.
"""
import enum
from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class Ensemble(str, enum.Enum):
    GOE = "GOE"
    GUE = "GUE"
    BERNOULLI = "BernoulliWigner"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"BE": cls.BERNOULLI, "BERNOULLI": cls.BERNOULLI}
        key = str(value)
        for member in cls:
            if member.value.lower() == key.lower() or member.name == key.upper():
                return member
        if key.upper() in aliases:
            return aliases[key.upper()]
        raise ValueError(f"unknown ensemble {value!r}")


# stream tags keep the ensembles statistically independent under one master seed
_STREAM = {Ensemble.GOE: 1, Ensemble.GUE: 2, Ensemble.BERNOULLI: 3}
PERMUTATION_STREAM = 4


def _mix64(z):
    # splitmix64 finaliser: a bijection on 64-bit words
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


def derive_trial_seed(master_seed, trial_index, stream=0):
    """64-bit seed for one trial; injective in ``trial_index`` for fixed master/stream."""
    key = _mix64((int(master_seed) ^ (int(stream) * _GOLDEN)) & MASK64)
    return _mix64((key + (int(trial_index) + 1) * _GOLDEN) & MASK64)


def trial_rng(master_seed, trial_index, stream=0):
    return np.random.Generator(np.random.PCG64(derive_trial_seed(master_seed, trial_index, stream)))


@dataclass(frozen=True)
class EnsembleSpec:
    kind: Ensemble
    N: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", Ensemble.parse(self.kind))
        if int(self.N) < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if not 0 <= int(self.seed) <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def rng(self, trial):
        return trial_rng(self.seed, trial, _STREAM[self.kind])

    def sample(self, trial):
        return _SAMPLERS[self.kind](self, trial)


def _require(spec, kind):
    if spec.kind is not kind:
        raise ValueError(f"spec is {spec.kind.value}, expected {kind.value}")


def sample_goe(spec, trial):
    """(A + A^T)/2 with standard normal A: off-diagonal variance 1/2, diagonal 1."""
    _require(spec, Ensemble.GOE)
    A = spec.rng(trial).standard_normal((spec.N, spec.N))
    return (A + A.T) / 2


def sample_gue(spec, trial):
    """(A + A^*)/2 with A having iid standard complex normal entries (E|A_ij|^2 = 1)."""
    _require(spec, Ensemble.GUE)
    rng = spec.rng(trial)
    n = spec.N
    A = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    return (A + A.conj().T) / 2


def sample_bernoulli(spec, trial):
    """Symmetric matrix of independent fair signs on and above the diagonal."""
    _require(spec, Ensemble.BERNOULLI)
    n = spec.N
    signs = spec.rng(trial).integers(0, 2, size=(n, n), dtype=np.int8)
    U = np.triu(2.0 * signs - 1.0)
    return U + np.triu(U, 1).T


_SAMPLERS = {
    Ensemble.GOE: sample_goe,
    Ensemble.GUE: sample_gue,
    Ensemble.BERNOULLI: sample_bernoulli,
}


def random_permutation(n, seed, trial):
    """Uniform permutation of 1..n (Fisher-Yates via numpy's shuffle)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = trial_rng(seed, trial, PERMUTATION_STREAM)
    return rng.permutation(n) + 1


def semicircle_cdf(x):
    """CDF of the semicircle law on [-1, 1]."""
    x = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
    return 0.5 + (x * np.sqrt(1.0 - x * x) + np.arcsin(x)) / np.pi

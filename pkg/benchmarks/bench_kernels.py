"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

Each case is warmed up once (so compilation is excluded) and then timed with
``timeit``; the table reports the best per-call time of each variant.
"""
import argparse
import timeit

import numpy as np

from todaqr import kernels


def _sym(rng, n):
    A = rng.standard_normal((n, n))
    return (A + A.T) / 2


def _cases(rng):
    M = _sym(rng, 100)
    A = rng.standard_normal((100, 100))
    d, e = rng.standard_normal(100), np.append(rng.standard_normal(99), 0.0)
    a, b = rng.standard_normal(100) + 4, rng.standard_normal(99)
    la, lb = rng.standard_normal(100), np.log(np.abs(rng.standard_normal(99)))
    p = rng.permutation(10_000) + 1

    def householder(f):
        return lambda: f(M.copy())

    def tql(f):
        return lambda: f(d.copy(), e.copy(), np.eye(100), True, 3000)

    def qr(f):
        return lambda: f(A.copy())

    def qr_step(f):
        return lambda: f(a.copy(), b.copy())

    def deflate(f):
        return lambda: f(a.copy(), b.copy(), 1e-10, 10_000)

    def lattice(f):
        return lambda: f(la.copy(), lb.copy(), 1e-3, 200)

    def norms(f):
        return lambda: f(M)

    def lis(f):
        return lambda: f(p)

    return [
        ("householder_tridiag 100x100", householder, "householder_tridiag"),
        ("tql with vectors n=100", tql, "tql"),
        ("qr_householder 100x100", qr, "qr_householder"),
        ("tridiag_qr_step n=100", qr_step, "tridiag_qr_step"),
        ("tridiag_qr_deflate n=100", deflate, "tridiag_qr_deflate"),
        ("toda_lattice_advance n=100, 200 steps", lattice, "toda_lattice_advance"),
        ("block_norms 100x100", norms, "block_norms"),
        ("lis_patience n=10^4", lis, "lis_patience"),
    ]


def _best(call, repeat):
    call()  # warm-up / compile
    timer = timeit.Timer(call)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<40}{'numba (ms)':>12}{'numpy (ms)':>12}{'speed-up':>10}")
    for label, make, name in _cases(rng):
        t_nb = _best(make(getattr(kernels, name + "_nb")), args.repeat)
        t_np = _best(make(getattr(kernels, name + "_np")), args.repeat)
        print(f"{label:<40}{1e3 * t_nb:>12.4f}{1e3 * t_np:>12.4f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()

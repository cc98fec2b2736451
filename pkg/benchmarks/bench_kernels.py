"""Time the compiled kernels against the pure-Python fallback and LAPACK.

Usage: python benchmarks/bench_kernels.py [--sizes 32 64 100 200] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from meib import _pykernels

try:
    from meib import _ckernels
except ImportError:
    _ckernels = None


def _best_ms(fn, repeat):
    number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-6)))
    return 1e3 * min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 100, 200])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'N':>6}{'compiled ms':>14}{'python ms':>12}{'lapack ms':>12}{'speedup':>9}")
    for n in args.sizes:
        m = rng.normal(size=(n, n))
        a = m @ m.T / n
        x = rng.normal(size=(n, 20))
        cases = [
            ("eigh (vectors)", lambda k: k.eigh_tridiag_ql(a), lambda: np.linalg.eigh(a)),
            ("eigh (values)", lambda k: k.eigh_tridiag_ql(a, vectors=False), lambda: np.linalg.eigvalsh(a)),
            ("sq distances", lambda k: k.pairwise_sq_dists(x), None),
        ]
        for name, call, ref in cases:
            py = _best_ms(lambda: call(_pykernels), args.repeat)
            comp = _best_ms(lambda: call(_ckernels), args.repeat) if _ckernels else float("nan")
            lap = _best_ms(ref, args.repeat) if ref else float("nan")
            print(f"{name:<18}{n:>6}{comp:>14.3f}{py:>12.3f}{lap:>12.3f}{py / comp:>8.1f}x")


if __name__ == "__main__":
    main()

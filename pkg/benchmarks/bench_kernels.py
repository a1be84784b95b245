"""Compare the compiled and pure-Python permanent kernels.

    python benchmarks/bench_kernels.py [--sizes 4 8 12 16] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from scalinglab import _kernels_py

try:
    from scalinglab import _kernels as compiled
except ImportError:  # extension not built
    compiled = None


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 12, 16])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'n':>3} {'python [s]':>12} {'compiled [s]':>13} {'speedup':>8}")
    for n in args.sizes:
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        t_py = min(timeit.repeat(lambda: _kernels_py.permanent(a), number=1, repeat=args.repeat))
        if compiled is None:
            print(f"{n:>3} {t_py:>12.3e} {'n/a':>13} {'n/a':>8}")
            continue
        assert abs(compiled.permanent(a) - _kernels_py.permanent(a)) <= 1e-9 * (1 + abs(_kernels_py.permanent(a)))
        t_c = min(timeit.repeat(lambda: compiled.permanent(a), number=1, repeat=args.repeat))
        print(f"{n:>3} {t_py:>12.3e} {t_c:>13.3e} {t_py / t_c:>8.1f}")


if __name__ == "__main__":
    main()

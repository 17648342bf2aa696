"""Compare the compiled and pure-Python protocol kernels.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

from gge_thermo import _kernels_py as py
from gge_thermo import kernels

CASES = {
    "raise_level 1e4 steps": lambda m: m.raise_level(0.0, 1e-4, 10_000, 0.0, 10**8),
    "raise_level tail 1e-8": lambda m: m.raise_level(1.0, 1e-4, -1, 1e-8, 10**8),
    "spin_bath_series a=0.01": lambda m: m.spin_bath_series(0.01, 1.0, 1e-13, 10**8),
}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if kernels.compiled is None:
        print("compiled extension not available; only the Python timings are shown")
    print(f"{'case':28s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, fn in CASES.items():
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat)) * 1e3
        if kernels.compiled is not None:
            t_c = min(timeit.repeat(lambda: fn(kernels.compiled), number=1, repeat=args.repeat)) * 1e3
            print(f"{name:28s} {t_py:12.3f} {t_c:12.3f} {t_py / t_c:8.1f}")
        else:
            print(f"{name:28s} {t_py:12.3f} {'-':>12s} {'-':>8s}")


if __name__ == "__main__":
    main()

"""Compare the compiled Cauchy-sum kernel with the numpy fallback.

    python benchmarks/bench_kernels.py [--targets 4096] [--sources 65536] [--repeat 3]

Typical use is the off-grid evaluation of a solved map: a few thousand
boundary points against every density node of the solver grid.
"""
import argparse
import time

import numpy as np

from weldlab import kernels


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--targets", type=int, default=4096)
    p.add_argument("--sources", type=int, default=65536)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    rng = np.random.default_rng(0)
    t = np.exp(2j * np.pi * rng.random(args.targets))
    s = 2 * (rng.random(args.sources) - 0.5) + 2j * (rng.random(args.sources) - 0.5)
    w = rng.standard_normal(args.sources) + 1j * rng.standard_normal(args.sources)
    print(f"{args.targets} targets x {args.sources} sources, best of {args.repeat}")
    py, ref = _time(lambda: kernels.cauchy_sum_python(t, s, w), args.repeat)
    print(f"  python   {py:8.3f} s")
    if kernels.BACKEND != "compiled":
        print("  compiled extension not available; build with pip install -e . --no-build-isolation")
        return
    c, out = _time(lambda: kernels.cauchy_sum(t, s, w), args.repeat)
    err = np.max(np.abs(out - ref)) / np.max(np.abs(ref))
    print(f"  compiled {c:8.3f} s  ({py / c:.1f}x, threads={kernels.thread_count()}, rel. diff {err:.1e})")


if __name__ == "__main__":
    main()

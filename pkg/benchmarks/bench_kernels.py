"""Compare the compiled and pure-Python kernel backends.

Usage: python benchmarks/bench_kernels.py [--sizes 50 100 200] [--repeat 3]
"""

import argparse
import time

import numpy as np

from graphbli import _kernels
from graphbli.lap import solve_lap_max
from graphbli.sinkhorn import LotParams, lot_plan


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200, 400])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = [b for b in ("compiled", "python") if b in _kernels.BACKENDS]
    if "compiled" not in backends:
        print("compiled backend not built; timing the fallback only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<10}{'n':>6}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for n in args.sizes:
        profit = rng.uniform(size=(n, n))
        cases = {
            "lap": lambda: solve_lap_max(profit),
            "lot": lambda: lot_plan(profit, LotParams(reg=500.0)),
        }
        for name, fn in cases.items():
            row = {}
            for b in backends:
                prev = _kernels.set_backend(b)
                try:
                    row[b] = _best(fn, args.repeat)
                finally:
                    _kernels.set_backend(prev)
            speed = row["python"] / row["compiled"] if len(row) == 2 else float("nan")
            print(f"{name:<10}{n:>6}" + "".join(f"{row[b]:>11.4f}s" for b in backends)
                  + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()

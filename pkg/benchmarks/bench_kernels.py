"""Compiled vs numpy transition kernel: agreement and throughput.

Usage: python3 benchmarks/bench_kernels.py [--sizes 10000 1000000] [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from shearframe.kernels import nu_fill_compiled, nu_fill_python
from shearframe.windows import nu_table


def best_time(fn, x: np.ndarray, repeat: int) -> float:
    nodes, coef = nu_table()
    out = np.empty_like(x)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(x, out, nodes, coef)
        times.append(time.perf_counter() - t0)
    return min(times)


def run(sizes: list[int], repeat: int, seed: int = 0) -> list[dict]:
    nodes, coef = nu_table()
    rng = np.random.default_rng(seed)
    rows = []
    for n in sizes:
        x = rng.uniform(-1.5, 1.5, n)
        ref = np.empty_like(x)
        nu_fill_python(x, ref, nodes, coef)
        row = {"n": n, "numpy_s": best_time(nu_fill_python, x, repeat)}
        if nu_fill_compiled is not None:
            got = np.empty_like(x)
            nu_fill_compiled(x, got, nodes, coef)
            row["cython_s"] = best_time(nu_fill_compiled, x, repeat)
            row["speedup"] = row["numpy_s"] / row["cython_s"]
            row["max_abs_diff"] = float(np.max(np.abs(got - ref)))
        rows.append(row)
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[10_000, 100_000, 1_000_000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if nu_fill_compiled is None:
        print("compiled kernel not built; timing the numpy path only")
    print(f"{'n':>10} {'numpy [s]':>11} {'cython [s]':>11} {'speedup':>8} {'max |diff|':>11}")
    for r in run(args.sizes, args.repeat):
        if "cython_s" in r:
            print(f"{r['n']:>10} {r['numpy_s']:11.4e} {r['cython_s']:11.4e} {r['speedup']:8.2f} {r['max_abs_diff']:11.2e}")
        else:
            print(f"{r['n']:>10} {r['numpy_s']:11.4e} {'-':>11} {'-':>8} {'-':>11}")


if __name__ == "__main__":
    main()

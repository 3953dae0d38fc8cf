#!/usr/bin/env python3
"""Time the compiled CSR kernels against the numpy fallback.

Runs the four hot kernels (row-ranged matvec, transpose, sparse product,
Gauss-Seidel sweep) on 7-point Poisson operators of a few sizes and prints
best-of-N timings for whichever backends are importable, plus the speedup
when both are. The numbers are wall-clock on the current machine; use them
to sanity-check that the extension is worth shipping, not as a regression
gate.

    python3 benchmarks/bench_kernels.py --sizes 16,24,32 --repeats 5
"""
import argparse
import time

import numpy as np

from deflamg import _kernels_py
from deflamg.problems import poisson3d

try:
    from deflamg import _kernels
except ImportError:
    _kernels = None


def best_of(repeats, fn, *args):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backend(mod, A, repeats):
    n = A.nrows
    x = np.linspace(0.0, 1.0, n)
    out = np.empty(n)
    z = np.zeros(n)
    return {
        "spmv": best_of(repeats, mod.spmv_rows, A.row_ptr, A.col_idx, A.values, x, out, 0, n),
        "transpose": best_of(repeats, mod.transpose, n, A.ncols, A.row_ptr, A.col_idx, A.values),
        "spgemm": best_of(
            repeats,
            mod.spgemm,
            n, A.row_ptr, A.col_idx, A.values,
            A.ncols, A.row_ptr, A.col_idx, A.values,
        ),
        "gauss_seidel": best_of(repeats, mod.gauss_seidel, A.row_ptr, A.col_idx, A.values, x, z),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="16,24,32", help="comma list of grid sizes n (n^3 unknowns)")
    ap.add_argument("--repeats", type=int, default=5, help="take the best of this many runs")
    args = ap.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]

    backends = [("python", _kernels_py)]
    if _kernels is not None:
        backends.insert(0, ("compiled", _kernels))
    else:
        print("compiled extension not importable; timing the numpy fallback only")

    header = f"{'kernel':<14}{'n':>8}" + "".join(f"{name:>14}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for n in sizes:
        A = poisson3d(n).matrix
        results = {name: bench_backend(mod, A, args.repeats) for name, mod in backends}
        for kernel in ("spmv", "transpose", "spgemm", "gauss_seidel"):
            row = f"{kernel:<14}{n ** 3:>8}"
            for name, _ in backends:
                row += f"{results[name][kernel] * 1e3:>12.3f}ms"
            if len(backends) == 2:
                ratio = results["python"][kernel] / max(results["compiled"][kernel], 1e-12)
                row += f"{ratio:>9.1f}x"
            print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

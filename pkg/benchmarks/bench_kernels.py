"""Compare the compiled DP kernels against the pure-NumPy fallbacks.

Runs both backends on realistic sizes (a few minutes of audio), checks that
they produce identical results, and prints per-kernel timings.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from subalign import _pykernels

try:
    from subalign import _kernels
except ImportError:
    _kernels = None


def _time(fn, *args, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_dtw(repeat):
    rng = np.random.default_rng(0)
    cost = rng.normal(size=(200, 1500))
    t_py, d_py = _time(_pykernels.dtw_accumulate, cost, repeat=repeat)
    row = [("pure", t_py)]
    if _kernels is not None:
        t_c, d_c = _time(_kernels.dtw_accumulate, cost, repeat=repeat)
        assert np.allclose(d_py, d_c, rtol=1e-12, atol=1e-12)
        row.append(("cython", t_c))
    return "dtw_accumulate 200x1500", row


def bench_ctc(repeat):
    rng = np.random.default_rng(1)
    T, S = 1500, 401
    emit = np.log(rng.dirichlet(np.ones(S), size=T))
    allow_skip = (rng.random(S) < 0.5).astype(np.uint8)
    allow_skip[:2] = 0
    t_py, (f_py, b_py) = _time(_pykernels.ctc_viterbi_fill, emit, allow_skip, repeat=repeat)
    row = [("pure", t_py)]
    if _kernels is not None:
        t_c, (f_c, b_c) = _time(_kernels.ctc_viterbi_fill, emit, allow_skip, repeat=repeat)
        assert np.allclose(f_py, f_c, rtol=1e-12, atol=1e-12)
        reachable = np.isfinite(f_c)
        assert np.array_equal(b_py[-1][reachable], np.asarray(b_c)[-1][reachable])
        row.append(("cython", t_c))
    return f"ctc_viterbi_fill {T}x{S}", row


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3, help="take the best of N runs")
    args = parser.parse_args()

    if _kernels is None:
        print("compiled extension not available; timing the pure backend only")

    for bench in (bench_dtw, bench_ctc):
        name, rows = bench(args.repeat)
        print(name)
        for backend, seconds in rows:
            print(f"  {backend:>7}: {seconds * 1000:9.2f} ms")
        if len(rows) == 2:
            print(f"  speedup: {rows[0][1] / rows[1][1]:9.1f}x")


if __name__ == "__main__":
    main()

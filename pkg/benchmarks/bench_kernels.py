"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each kernel runs on identical inputs in both implementations; results are
checked for agreement before timings are reported.
"""
from __future__ import annotations

import argparse
import json
import platform
import statistics
import sys
import time

import numpy as np

from pbox_expect import _kernels_py

try:
    from pbox_expect import _kernels
except ImportError:
    _kernels = None


def lp_tableau(m: int, n: int, seed: int) -> tuple:
    """max c.x s.t. A x <= b, x >= 0 as a minimization tableau with slack basis."""
    rng = np.random.default_rng(seed)
    A = rng.random((m, n)) + 0.05
    b = rng.random(m) * n + 1.0
    c = rng.random(n)
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -c
    basis = np.arange(n, n + m, dtype=np.int64)
    return T, basis, n + m


def windows(n: int, seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    a = rng.random(n)
    lo = np.sort(rng.integers(0, n, n))
    hi = np.minimum(n - 1, lo + rng.integers(0, 64, n))
    hi = np.maximum.accumulate(hi)
    return a, lo.astype(np.int64), hi.astype(np.int64)


def timed(fn, repeat: int) -> tuple:
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def bench_simplex(impl, m, n, repeat):
    def go():
        T, basis, n_enter = lp_tableau(m, n, 7)
        st, it = impl.simplex_loop(T, basis, n_enter, 1e-9, 100_000)
        return st, it, -T[m, -1]
    return timed(go, repeat)


def bench_window(impl, n, repeat):
    a, lo, hi = windows(n, 11)
    return timed(lambda: impl.window_argmin(a, lo, hi), repeat)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", default=None)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled kernel not built; only the fallback is available", file=sys.stderr)
        return 1
    rows = []
    for m, n in ((32, 64), (64, 128), (128, 256)):
        tc, rc = bench_simplex(_kernels, m, n, args.repeat)
        tp, rp = bench_simplex(_kernels_py, m, n, args.repeat)
        if rc[:2] != rp[:2] or not np.isclose(rc[2], rp[2], rtol=1e-9, atol=1e-12):
            raise SystemExit(f"simplex results differ at {m}x{n}: {rc} vs {rp}")
        rows.append({"kernel": "simplex_loop", "size": f"{m}x{n}", "pivots": rc[1],
                     "compiled_s": tc, "pure_s": tp, "speedup": tp / tc})
    for n in (1 << 12, 1 << 15, 1 << 18):
        tc, rc = bench_window(_kernels, n, args.repeat)
        tp, rp = bench_window(_kernels_py, n, args.repeat)
        if not np.array_equal(rc, rp):
            raise SystemExit(f"window_argmin results differ at n={n}")
        rows.append({"kernel": "window_argmin", "size": str(n), "pivots": None,
                     "compiled_s": tc, "pure_s": tp, "speedup": tp / tc})
    print(f"{'kernel':<14} {'size':>8} {'compiled [s]':>13} {'pure [s]':>11} {'speedup':>8}")
    for r in rows:
        print(f"{r['kernel']:<14} {r['size']:>8} {r['compiled_s']:>13.3e} {r['pure_s']:>11.3e} "
              f"{r['speedup']:>7.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"python": platform.python_version(), "numpy": np.__version__,
                       "repeat": args.repeat, "rows": rows}, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())

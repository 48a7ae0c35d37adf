"""Time the numba and numpy kernel paths against each other.

    python benchmarks/bench_kernels.py [--repeat 5]

Both paths are called directly, so the MFLAB_NUMBA flag does not matter here.
"""
import argparse
import time

import numpy as np

from mflab import kernels
from mflab.potentials import scale, square_barrier
from mflab.scattering import _build_shells, _potential_segments
from mflab.weights import _seed


def best_of(fn, repeat):
    fn()  # warm-up (also triggers JIT compilation)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    V = scale(square_barrier(10.0, 1.0), 1e3, 0.8)
    edges, q, nsteps = _build_shells(_potential_segments(V), 20000)
    cases = {
        "rk4_shells": (lambda: kernels.rk4_shells_jit(edges, q, nsteps, 0.0, 1.0),
                       lambda: kernels.rk4_shells_numpy(edges, q, nsteps, 0.0, 1.0)),
    }
    for N in (200, 20000):
        seed = _seed(N)
        cases[f"weight_recursion N={N}"] = (lambda s=seed, n=N: kernels.weight_recursion_jit(s, n),
                                            lambda s=seed, n=N: kernels.weight_recursion_numpy(s, n))

    print(f"{'kernel':28s} {'numba [ms]':>12s} {'numpy [ms]':>12s} {'speedup':>8s} {'max diff':>10s}")
    for name, (fast, slow) in cases.items():
        tj, tn = best_of(fast, args.repeat), best_of(slow, args.repeat)
        a, b = fast(), slow()
        a = np.concatenate([np.ravel(x) for x in (a if isinstance(a, tuple) else (a,))])
        b = np.concatenate([np.ravel(x) for x in (b if isinstance(b, tuple) else (b,))])
        ok = np.isfinite(a) & np.isfinite(b)
        diff = np.max(np.abs(a[ok] - b[ok]) / np.maximum(np.abs(b[ok]), 1e-300))
        print(f"{name:28s} {tj * 1e3:12.3f} {tn * 1e3:12.3f} {tn / tj:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the stencil kernels and the fused scalar right-hand side in-process
(both implementations are importable side by side), then times a full
Burgers solve in subprocesses with AUGLAB_BACKEND forced to each backend.

Usage: python benchmarks/bench_kernels.py [--n 2048] [--reps 2000]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from auglab import kernels
from auglab.backend import USE_NUMBA


def timeit(fn, reps):
    fn()  # warm-up (numba compiles here)
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def bench_kernels(n, reps):
    rng = np.random.default_rng(0)
    u = rng.normal(size=n)
    f = u**3
    alpha = 3.0 * u**2
    dx = 1.0 / n
    fpoly = np.array([0.0, 0.0, 0.0, 1.0])
    dfpoly = np.array([0.0, 0.0, 3.0])
    vpoly = np.array([0.0, 1.0])

    cases = [
        ("diff1 (order 2)", lambda impl: impl(u, dx, 1, 2, True),
         kernels.diff_numpy, getattr(kernels, "diff_numba", None)),
        ("diff3 (order 4)", lambda impl: impl(u, dx, 3, 4, True),
         kernels.diff_numpy, getattr(kernels, "diff_numba", None)),
        ("stabilized flux div", lambda impl: impl(f, u, alpha, dx, True, 2),
         kernels.llf_divergence_numpy,
         getattr(kernels, "llf_divergence_numba", None)),
        ("fused scalar rhs",
         lambda impl: impl(u, dx, 0.05, 1.0, 0.5, fpoly, dfpoly, vpoly,
                           True, 2),
         kernels.rhs_scalar_linear_numpy,
         getattr(kernels, "rhs_scalar_linear_numba", None)),
    ]
    print(f"\nkernel timings, n = {n}, {reps} reps (microseconds per call)")
    print(f"{'kernel':<24}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for name, call, f_np, f_nb in cases:
        t_np = timeit(lambda: call(f_np), reps) * 1e6
        if f_nb is None:
            print(f"{name:<24}{t_np:>12.2f}{'-':>12}{'-':>10}")
            continue
        t_nb = timeit(lambda: call(f_nb), reps) * 1e6
        ref = call(f_np)
        got = call(f_nb)
        assert np.allclose(ref, got, atol=1e-12), name
        print(f"{name:<24}{t_np:>12.2f}{t_nb:>12.2f}{t_np / t_nb:>10.1f}x")


RUN_SNIPPET = """
import time
import numpy as np
from auglab import builtin_model, LinearConstant, Grid1D, SolverConfig, run
from auglab.backend import backend_name

grid = Grid1D(0.0, 1.0, 512, "periodic")
config = SolverConfig(t_end=0.2, record_every=10**9)
spec = LinearConstant([[1.0]], [[0.0]], 0.05)
system = builtin_model("scalar_burgers")
initial = lambda x: np.sin(2 * np.pi * x)[:, None]
run(system, spec, grid, config, initial)  # warm-up / compile
t0 = time.perf_counter()
state, _ = run(system, spec, grid, config, initial)
print(f"{backend_name()}: {time.perf_counter() - t0:.3f}s "
      f"(final max |u| = {np.max(np.abs(state.u)):.6f})")
"""


def bench_full_run():
    print("\nfull Burgers solve (n=512, t_end=0.2, eps=0.05):")
    for backend in ("numpy", "numba"):
        env = dict(os.environ, AUGLAB_BACKEND=backend)
        proc = subprocess.run([sys.executable, "-c", RUN_SNIPPET], env=env,
                              capture_output=True, text=True)
        out = proc.stdout.strip() or proc.stderr.strip()
        print(f"  {out}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=2048)
    parser.add_argument("--reps", type=int, default=2000)
    parser.add_argument("--skip-run", action="store_true",
                        help="only benchmark the kernels")
    args = parser.parse_args()
    print(f"active backend: {'numba' if USE_NUMBA else 'numpy'} "
          f"(set AUGLAB_BACKEND to override)")
    bench_kernels(args.n, args.reps)
    if not args.skip_run:
        bench_full_run()


if __name__ == "__main__":
    main()

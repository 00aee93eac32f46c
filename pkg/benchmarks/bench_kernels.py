"""Benchmark the numba kernels against the pure numpy/scipy fallback.

Runs each hot loop (Bloch RK4 integrator, lock-in filter cascade) on both
backends, checks they agree, and prints best-of-N wall times plus the
speedup. Select the default backend for a real run with AMORSIM_BACKEND.

Usage: python benchmarks/bench_kernels.py [n_steps]
"""
import math
import sys
import time

import numpy as np

from amorsim import backend, kernels

REPEATS = 5

OMEGA0 = 2.0 * math.pi * 580.0e3
GAMMA = 62832.0
DT = 1.0 / 15.0e6


def bench(fn, repeats=REPEATS):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bloch_static(n_steps):
    return kernels.bloch_rk4((0.0, 0.0, 0.0), n_steps, DT, 0.0, OMEGA0,
                             GAMMA, 3.0e4, 580.0e3, 0.5,
                             kernels.WAVEFORM_SQUARE, stride=6)


def bloch_injected(n_steps):
    return kernels.bloch_rk4((0.0, 0.0, 0.0), n_steps, DT, 0.0, OMEGA0,
                             GAMMA, 3.0e4, 580.0e3, 0.5,
                             kernels.WAVEFORM_SQUARE,
                             inj_amp=0.002 * OMEGA0, inj_freq=350.0,
                             stride=6)


def iir(x):
    state = np.zeros(1)
    return kernels.iir_cascade(x, 1.0 - math.exp(-1.0 / 750.0), state)


def main():
    n_steps = int(sys.argv[1]) if len(sys.argv) > 1 else 1_500_000
    n_steps -= n_steps % 6
    x = np.random.default_rng(0).standard_normal(n_steps)
    cases = (
        ("bloch_rk4 static field", lambda: bloch_static(n_steps)),
        ("bloch_rk4 injected tone", lambda: bloch_injected(n_steps)),
        ("iir_cascade order 1", lambda: iir(x)),
    )

    if not backend._NUMBA_OK:
        print("numba is not importable; nothing to compare")
        return 1

    print(f"{n_steps} steps per case, best of {REPEATS}\n")
    print(f"{'case':<26} {'numba':>10} {'numpy':>10} {'speedup':>9}")
    for name, fn in cases:
        results = {}
        for which in ("numba", "numpy"):
            backend.ACTIVE = which
            fn()                      # warmup: jit compile, page in
            results[which] = bench(fn)
        t_nb, out_nb = results["numba"]
        t_np, out_np = results["numpy"]
        if not np.allclose(out_np, out_nb, rtol=1e-9, atol=1e-14):
            print(f"{name:<26} BACKENDS DISAGREE")
            return 1
        print(f"{name:<26} {t_nb * 1e3:>8.2f}ms {t_np * 1e3:>8.2f}ms "
              f"{t_np / t_nb:>8.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())

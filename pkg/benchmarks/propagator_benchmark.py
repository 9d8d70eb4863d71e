#!/usr/bin/env python3
"""Benchmark the compiled propagation kernel against the pure-Python
(lfilter) fallback on the hot Langevin recursion.

Usage: python benchmarks/propagator_benchmark.py [--steps N]
"""

import argparse
import math
import time

import numpy as np

from nvlev.dynamics import ModeConfig, step_coefficients


def run(backend_fn, coeffs, noise, drive, extra):
    out = np.empty(noise.shape[0])
    t0 = time.perf_counter()
    backend_fn(coeffs.a11, coeffs.a12, coeffs.a21, coeffs.a22,
               coeffs.l11, coeffs.l21, coeffs.l22, coeffs.bx, coeffs.bv,
               1e-9, 0.0, noise, drive, out, 1, **extra)
    return time.perf_counter() - t0, out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=10_000_000)
    args = parser.parse_args()

    mode = ModeConfig(omega=2 * math.pi * 839.0, Q=1e6, mass_eff=1.07e-10)
    dt = mode.period / 25.0
    coeffs = step_coefficients(mode, 300.0, dt)

    try:
        from nvlev import _kernels
    except ImportError:
        _kernels = None
    from nvlev import _propagate_py

    rng = np.random.default_rng(1)
    results = {}
    print(f"{args.steps:,} steps of the exact damped-oscillator recursion "
          f"(omega = 2 pi 839 Hz, Q = 1e6, dt = T/25)\n")
    print(f"{'backend':<12} {'time [s]':>10} {'steps/s':>14}")
    for chunk_steps in (args.steps,):
        noise = rng.standard_normal((chunk_steps, 2))
        drive = np.empty(0)
        if _kernels is not None:
            elapsed, out = run(_kernels.propagate, coeffs, noise, drive, {})
            results["compiled"] = out
            print(f"{'compiled':<12} {elapsed:>10.3f} {chunk_steps / elapsed:>14.3e}")
        elapsed, out = run(_propagate_py.propagate, coeffs, noise, drive,
                           {"p_cont": coeffs.p_cont, "dt": coeffs.dt})
        results["python"] = out
        print(f"{'python':<12} {elapsed:>10.3f} {chunk_steps / elapsed:>14.3e}")

    if "compiled" in results:
        scale = np.abs(results["compiled"]).max()
        dev = np.abs(results["compiled"] - results["python"]).max()
        print(f"\nmax |compiled - python| = {dev:.3e} "
              f"({dev / scale:.2e} of the trace scale)")


if __name__ == "__main__":
    main()

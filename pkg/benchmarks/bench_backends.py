#!/usr/bin/env python3
"""Benchmark the compiled integration kernels against the numpy fallback.

Usage: python benchmarks/bench_backends.py [--steps N]

Runs the Strang and implicit-midpoint kernels on a 3-dof model and reports
steps/second for whichever backends are importable.
"""

import argparse
import math
import time

import numpy as np

from reslab import _kernels_py

try:
    from reslab import _kernels as _compiled
except ImportError:
    _compiled = None


def strang_args(n_steps):
    A = np.diag([1.0, -1.0, 1.0])
    b = np.array([0.0, 0.1, 0.0])
    kmat = np.array([[1.0, -1.0, 0.0], [0.0, 1.0, 1.0], [1.0, 0.0, -1.0]])
    amps = np.array([1e-3, 5e-4, 2e-4])
    phases = np.array([0.2, -0.4, 0.9])
    theta = np.array([0.3, 1.1, 2.0])
    action = np.array([0.7, -0.6, 0.4])
    stride = max(1, n_steps // 100)
    ns = n_steps // stride + 1 + (1 if n_steps % stride else 0)
    outs = (np.empty((ns, 3)), np.empty((ns, 3)), np.empty(ns))
    return (A, b, kmat, amps, phases, theta, action, 0.01, n_steps, stride,
            math.inf) + outs


def midpoint_args(n_steps):
    A = np.eye(3)
    b = np.zeros(3)
    kmat = np.array([[1.0, -1.0, 0.0], [0.0, 1.0, 1.0]])
    c0 = np.array([0.02, 0.01])
    c1 = np.zeros((2, 3))
    c1[0, 0] = 0.01
    c2 = np.zeros((2, 3, 3))
    c2[1, 1, 1] = 0.005
    phases = np.array([0.3, -0.2])
    theta = np.array([0.4, 1.5, 0.1])
    action = np.array([0.8, 0.5, 0.9])
    stride = max(1, n_steps // 100)
    ns = n_steps // stride + 1 + (1 if n_steps % stride else 0)
    outs = (np.empty((ns, 3)), np.empty((ns, 3)), np.empty(ns))
    return (A, b, kmat, c0, c1, c2, phases, theta, action, 0.01, n_steps,
            stride, math.inf, 1e-12, 50) + outs


def time_run(fn, args_builder, n_steps):
    args = args_builder(n_steps)
    t0 = time.perf_counter()
    fn(*args)
    dt = time.perf_counter() - t0
    return n_steps / dt


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=2_000_000)
    args = parser.parse_args()

    backends = [("python", _kernels_py)]
    if _compiled is not None:
        backends.insert(0, ("cython", _compiled))
    else:
        print("compiled kernels not available; benchmarking fallback only")

    print(f"{'kernel':<18}{'backend':<10}{'steps/s':>14}")
    rates = {}
    for name, mod in backends:
        steps = args.steps if name == "cython" else max(args.steps // 20, 10_000)
        rate = time_run(mod.split_strang, strang_args, steps)
        rates[("strang", name)] = rate
        print(f"{'split_strang':<18}{name:<10}{rate:>14,.0f}")
    for name, mod in backends:
        steps = (args.steps // 4 if name == "cython"
                 else max(args.steps // 80, 10_000))
        rate = time_run(mod.implicit_midpoint, midpoint_args, steps)
        rates[("midpoint", name)] = rate
        print(f"{'implicit_midpoint':<18}{name:<10}{rate:>14,.0f}")
    if _compiled is not None:
        for kernel in ("strang", "midpoint"):
            ratio = rates[(kernel, "cython")] / rates[(kernel, "python")]
            print(f"{kernel}: compiled is {ratio:,.1f}x faster")


if __name__ == "__main__":
    main()

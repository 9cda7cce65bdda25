"""Compiled versus pure-Python kernels on the workloads that dominate runtime.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from ballistic.kernels import available_backends


def workloads(mod):
    rng = np.random.default_rng(0)
    p = np.exp(-np.linspace(-6, 6, 4001) ** 2)
    n = 4001
    lower, upper = -np.full(n, 0.2), -np.full(n, 0.2)
    diag, rhs = np.full(n, 1.4), rng.random(n)
    return {
        "thomas n=4001": lambda: mod.thomas(lower, diag, upper, rhs),
        "cn_step nx=4001": lambda: mod.cn_step(p, 0.3),
        "explicit_step nx=4001": lambda: mod.explicit_step(p, 0.3),
        "bouncer_rk4 20000 steps": lambda: mod.bouncer_rk4(0.0, 0.0, 1.0, 2.0, 4.0, 1.0, 3.1416e-3, 20000),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = available_backends()
    if "cython" not in backends:
        print("compiled kernels unavailable; only the Python fallback is installed")
    timings = {}
    for name, mod in backends.items():
        for label, fn in workloads(mod).items():
            number = 3 if name == "python" else 50
            best = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number
            timings[(label, name)] = best
    print(f"{'workload':28s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for label in workloads(backends["python"]):
        py = timings[(label, "python")]
        cy = timings.get((label, "cython"))
        if cy is None:
            print(f"{label:28s} {py * 1e3:12.3f} {'-':>12s} {'-':>8s}")
        else:
            print(f"{label:28s} {py * 1e3:12.3f} {cy * 1e3:12.3f} {py / cy:8.1f}x")


if __name__ == "__main__":
    main()

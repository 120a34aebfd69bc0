"""Compare the compiled and numpy DP kernels on the Swansea day.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--dz 0.01 0.005]

Prints best-of-N wall time per backend and checks the two value tables are
bit-identical.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from lagoonopt import DpParams, swansea_config
from lagoonopt import kernels
from lagoonopt.core import Objective, objective_weights
from lagoonopt.dp import build_problem
from lagoonopt.io import synth_tide


def best_time(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        started = time.perf_counter()
        fn()
        times.append(time.perf_counter() - started)
    return min(times)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--dz", type=float, nargs="+", default=[0.02, 0.01, 0.005])
    parser.add_argument("--turbines", type=int, default=16)
    parser.add_argument("--enum-steps", type=int, default=8)
    args = parser.parse_args(argv)

    config = swansea_config(n_turbines=args.turbines)
    tide = synth_tide(0.0, 4.0, 44_700.0, 0.0, steps=48)
    weights = objective_weights(Objective.MAX_ENERGY, None, tide.n_steps)
    backends = [("python", kernels.python_backend)]
    if kernels.compiled_backend is not None:
        backends.append(("cython", kernels.compiled_backend))
    else:
        print("compiled kernels not built; timing the numpy backend only")

    print(f"{'dz (m)':>8} {'states':>7} {'backend':>8} {'dp (s)':>9} {'speed-up':>9}")
    for dz in args.dz:
        problem = build_problem(config, tide, weights, DpParams(level_resolution_m=dz))
        tables, base = {}, None
        for name, module in backends:
            tables[name] = module.dp_backward(problem)
            t = best_time(lambda: module.dp_backward(problem), args.repeat)
            base = base or t
            print(f"{dz:>8g} {problem.n_states:>7d} {name:>8} {t:>9.4f} {base / t:>8.1f}x")
        if len(tables) == 2:
            same = all(np.array_equal(a, b) for a, b in zip(tables["python"][:2], tables["cython"][:2]))
            print(f"{'':>8} value and policy tables identical: {same}")

    # exhaustive enumeration is a plain depth-first loop, where compilation pays most
    small = swansea_config(n_turbines=2, surface_area_m2=1.5e6)
    short = synth_tide(0.0, 3.0, 6 * 1800.0, 0.4, steps=args.enum_steps)
    problem = build_problem(small, short, np.ones(short.n_steps), DpParams(level_resolution_m=0.05))
    print(f"\nenumeration, {4 ** short.n_steps} sequences")
    results, base = {}, None
    for name, module in backends:
        results[name] = module.enumerate_best(problem, problem.j0)
        t = best_time(lambda: module.enumerate_best(problem, problem.j0), max(1, args.repeat // 2))
        base = base or t
        print(f"{name:>8} {t:>9.4f} s {base / t:>8.1f}x")
    if len(results) == 2:
        print(f"identical optimum and sequence: {results['python'] == results['cython']}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

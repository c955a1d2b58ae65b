#!/usr/bin/env python3
"""Benchmark the compiled flow kernels against the pure-Python fallback.

Solves the same random instances under each available engine and prints a
per-size table of mean wall time plus the speedup.  Results are identical
across engines (asserted); only the time differs.

    python benchmarks/compare_engines.py --sizes 2,5,10,15 --per-size 5
"""

import argparse
import time

import numpy as np

from cegames import flow
from cegames.nash import SolveOptions, solve_nash
from cegames.randgen import gen_random


def time_engine(engine: str, sizes, per_size):
    flow.set_engine(engine)
    means = {}
    profiles = {}
    for n in sizes:
        elapsed = []
        for seed in range(per_size):
            game = gen_random(n, n, seed)
            start = time.perf_counter()
            solution = solve_nash(game, SolveOptions())
            elapsed.append(time.perf_counter() - start)
            profiles[(n, seed)] = solution.profile.alloc
        means[n] = sum(elapsed) / len(elapsed)
    return means, profiles


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="2,5,10,15,20")
    parser.add_argument("--per-size", type=int, default=5)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    engines = flow.available_engines()
    if "compiled" not in engines:
        print("compiled kernels not built; timing the fallback only")

    results = {}
    outputs = {}
    for engine in engines:
        results[engine], outputs[engine] = time_engine(engine, sizes,
                                                       args.per_size)
    if len(engines) == 2:
        for key, alloc in outputs["compiled"].items():
            assert np.allclose(alloc, outputs["python"][key], atol=1e-12), key

    header = f"{'n=m':>5} " + " ".join(f"{e + ' (ms)':>14}" for e in engines)
    if len(engines) == 2:
        header += f" {'speedup':>9}"
    print(header)
    for n in sizes:
        row = f"{n:>5} " + " ".join(
            f"{results[e][n] * 1e3:>14.2f}" for e in engines)
        if len(engines) == 2:
            row += f" {results['python'][n] / results['compiled'][n]:>8.1f}x"
        print(row)
    flow.set_engine("auto")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

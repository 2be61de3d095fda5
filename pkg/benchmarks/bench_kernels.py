"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from psforge._backend import available_backends
import psforge.factors as factors
from psforge.dalembert import FrameGrid, revolution_potentials
from psforge.surface import mesh_from_frames


def packed_chain(rng, n):
    kinds = rng.integers(0, 2, n).astype(np.int8)
    angles = rng.uniform(-3, 3, n)
    coefs = rng.uniform(0, 0.95, n) * np.exp(1j * rng.uniform(0, 2 * np.pi, n))
    return kinds, angles, coefs


def cases(mod, rng):
    k, t, c = packed_chain(rng, 400)
    plus_t = rng.uniform(-3, 3, 400)
    plus_a = rng.uniform(0, 0.9, 400) * np.exp(1j * rng.uniform(0, 6, 400))

    def with_backend(fn):
        def run():
            old = factors.kernels
            factors.kernels = mod
            try:
                return fn()
            finally:
                factors.kernels = old

        return run

    grid16 = FrameGrid(revolution_potentials(0.8, 8), 16, 16, threads=1)

    return {
        "eval_chain (400 factors)": lambda: mod.eval_chain(k, t, c, 1.3),
        "eval_chain_deriv (400 factors)": lambda: mod.eval_chain_deriv(k, t, c, 1.3),
        "split_batch (400 factors)": lambda: mod.split_batch(k, t, c),
        "push_minus (through 400 plus)": lambda: mod.push_minus(plus_t.copy(), plus_a.copy(), 400, 0.2, 0.3j),
        # chain bookkeeping dominates the grid build, evaluation dominates the mesh
        "FrameGrid revolution 16x16": with_backend(lambda: FrameGrid(revolution_potentials(0.8, 8), 16, 16, threads=1)),
        "mesh_from_frames 16x16": with_backend(lambda: mesh_from_frames(grid16, 1.0)),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = available_backends()
    timings = {}
    for name, mod in backends.items():
        for case, fn in cases(mod, np.random.default_rng(0)).items():
            number = 1 if "16x16" in case else 20
            best = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number
            timings.setdefault(case, {})[name] = best
    names = sorted(backends)
    print(f"{'case':34s}" + "".join(f"{n:>14s}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for case, row in timings.items():
        line = f"{case:34s}" + "".join(f"{row[n] * 1e3:12.3f}ms" for n in names)
        if "cython" in row:
            line += f"{row['python'] / row['cython']:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()

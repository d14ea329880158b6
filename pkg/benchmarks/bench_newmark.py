"""Time the compiled Newmark kernel against the numpy/scipy fallback.

    python benchmarks/bench_newmark.py [--N 100] [--steps 2000] [--repeat 5]
"""
import argparse
import time

import numpy as np

from flatbeam import _kernels
from flatbeam.beamsim import BeamGrid, SimConfig, _effective_band, assemble_operator


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--N", type=int, default=100)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()

    grid, cfg = BeamGrid(args.N), SimConfig(dt=5e-3)
    op = assemble_operator(grid)
    t = cfg.dt * np.arange(args.steps + 1)
    u = np.sin(t) ** 2
    zeros = np.zeros(args.N)
    call = lambda f: f(_effective_band(op, cfg), op.mass, op.load, u, zeros, zeros, zeros,
                       cfg.dt, 0.25, 0.5, 100)

    t_py, ref = best_of(lambda: call(_kernels.newmark_py.run_newmark), args.repeat)
    print(f"python fallback : {t_py * 1e3:9.2f} ms  ({args.N} nodes, {args.steps} steps)")
    if _kernels.BACKEND != "cython":
        print("compiled kernel : not built (install with Cython available)")
        return
    t_cy, got = best_of(lambda: call(_kernels.run_newmark), args.repeat)
    diff = np.max(np.abs(np.asarray(got[1]) - np.asarray(ref[1]))) / np.max(np.abs(ref[1]))
    print(f"compiled kernel : {t_cy * 1e3:9.2f} ms  speed-up {t_py / t_cy:5.1f}x, "
          f"max relative snapshot difference {diff:.1e}")


if __name__ == "__main__":
    main()

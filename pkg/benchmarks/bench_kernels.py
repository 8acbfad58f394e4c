"""Time the numba and numpy backends of the diamond sweep on the same grid.

    python3 benchmarks/bench_kernels.py --n 1500 --repeat 3

Both backends must produce bit-identical fields; the script exits non-zero
if they do not.
"""

import argparse
import sys
import time

import numpy as np

from rpdecay import BackgroundSpec, CharacteristicData, NullGrid, evolve


def bench(bg, ell, grid, data, backend, repeat):
    evolve(bg, ell, NullGrid(grid.u0, grid.v0, grid.h, 8, 8), data, backend=backend)  # JIT warm-up
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = evolve(bg, ell, grid, data, backend=backend).values
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1500, help="nodes per null direction")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--ell", type=int, default=1)
    args = ap.parse_args(argv)

    bg = BackgroundSpec.schwarzschild(1.0, eps_hor=1e-250)
    grid = NullGrid(0.0, 0.0, 60.0 / (args.n - 1), args.n, args.n)
    data = CharacteristicData.gaussian(1.0, 12.0, 2.0)
    cells = (args.n - 1) ** 2
    rows = {}
    for backend in ("numba", "numpy"):
        t, vals = bench(bg, args.ell, grid, data, backend, args.repeat)
        rows[backend] = vals
        print(f"{backend:6s} {t * 1e3:9.1f} ms  {cells / t / 1e6:8.1f} Mcell/s")
    same = np.array_equal(rows["numba"], rows["numpy"])
    print(f"bit-identical: {same}")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())

import os
import sys
import time

import numpy as np

sys.path.append(os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(__file__))), "backend"))

from oscdom.czo import apply, apply_at
from oscdom.field import Grid, GridFunction
from oscdom.lattice import ShiftedLatticeSet
from oscdom.local_stats import hl_maximal
from oscdom.registry import OperatorRegistry
from oscdom.sobolev import riesz_potential


def timed(label, fn, *args):
    start = time.perf_counter()
    fn(*args)
    print(f"{label:40s} {time.perf_counter() - start:8.4f}s")


if __name__ == "__main__":
    registry = OperatorRegistry(os.path.join(os.path.dirname(__file__), "..", "..", "backend", "plugins"))
    hilbert, riesz1 = registry.resolve("hilbert"), registry.resolve("riesz1")
    rng = np.random.default_rng(0)

    for cells in (1024, 4096, 8192):
        grid = Grid.centered(2.0, cells, 1)
        f = GridFunction(grid, rng.standard_normal(grid.shape))
        timed(f"hilbert fft N={cells}", apply, hilbert, f)
        timed(f"hilbert direct, 256 targets N={cells}", apply_at, hilbert, f, grid.midpoints()[::cells // 256])
        timed(f"maximal function N={cells}", hl_maximal, f, ShiftedLatticeSet(1))

    for cells in (128, 256, 512):
        grid = Grid.centered(2.0, cells, 2)
        f = GridFunction(grid, rng.standard_normal(grid.shape))
        timed(f"riesz1 fft N={cells}^2", apply, riesz1, f)
        timed(f"riesz potential N={cells}^2", riesz_potential, GridFunction(grid, np.abs(f.values)))

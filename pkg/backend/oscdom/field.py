"""
Uniform grids and piecewise-constant functions on them.

A GridFunction holds one value per cell. Cubes passed to integrate/average/...
are snapped to the nearest cell boundaries. A function flagged `compact`
vanishes outside its grid box, so cubes may leave the box and the exterior
counts as zero; otherwise leaving the box raises CubeOutsideDomain.
"""

import csv
import io
import math
import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import CubeBelowResolution, CubeOutsideDomain
from .lattice import Cube

BINARY_MAGIC = b"OSCG"


@dataclass(frozen=True)
class Grid:
    box: Cube
    cells: int

    def __post_init__(self):
        if int(self.cells) != self.cells or self.cells < 1:
            raise ValueError(f"cells per axis must be a positive integer, got {self.cells}")
        object.__setattr__(self, "cells", int(self.cells))

    @classmethod
    def centered(cls, half_width, cells, dim=1):
        return cls(Cube((0.0,) * dim, 2.0 * half_width), cells)

    @property
    def dim(self):
        return self.box.dim

    @property
    def spacing(self):
        return self.box.side / self.cells

    @property
    def shape(self):
        return (self.cells,) * self.dim

    @property
    def total_cells(self):
        return self.cells ** self.dim

    @property
    def cell_measure(self):
        return self.spacing ** self.dim

    def axis_midpoints(self):
        return self.box.lower[0] + (np.arange(self.cells) + 0.5) * self.spacing

    def midpoints(self):
        """Cell midpoints, shape (total_cells, dim), in C order of `values`"""
        h = self.spacing
        axes = [lo + (np.arange(self.cells) + 0.5) * h for lo in self.box.lower]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def index_range(self, q):
        """Snapped per-axis cell ranges [i0, i1) of q, not clipped to the box."""
        if q.dim != self.dim:
            raise ValueError(f"cube dimension {q.dim} != grid dimension {self.dim}")
        h = self.spacing
        lo = np.floor((q.lower - self.box.lower) / h + 0.5).astype(np.int64)
        hi = np.floor((q.upper - self.box.lower) / h + 0.5).astype(np.int64)
        return [(int(a), int(b)) for a, b in zip(lo, hi)]

    def cells_in(self, q, strict=True):
        """Flat indices of in-box cells of snapped q."""
        ranges = self.index_range(q)
        if strict and any(b - a < 1 for a, b in ranges):
            raise CubeBelowResolution(f"cube of side {q.side} snaps to no cell at spacing {self.spacing}")
        clipped = [np.arange(max(a, 0), min(b, self.cells)) for a, b in ranges]
        if any(len(c) == 0 for c in clipped):
            return np.zeros(0, dtype=np.int64)
        mesh = np.meshgrid(*clipped, indexing="ij")
        return np.ravel_multi_index(tuple(m.ravel() for m in mesh), self.shape)

    def slices(self, q):
        """Clipped index slices of snapped q (may be empty)."""
        return tuple(slice(max(a, 0), max(min(b, self.cells), 0)) for a, b in self.index_range(q))

    def locate(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.floor((points - self.box.lower) / self.spacing).astype(np.int64)

    def enlarge(self, q):
        """Smallest aligned grid with the same spacing covering box ∪ q."""
        ranges = self.index_range(q)
        lows = [min(0, a) for a, _ in ranges]
        highs = [max(self.cells, b) for _, b in ranges]
        size = max(hi - lo for lo, hi in zip(lows, highs))
        if all(lo == 0 for lo in lows) and size == self.cells:
            return self
        lower = self.box.lower + np.array(lows) * self.spacing
        return Grid(Cube.from_lower(lower, size * self.spacing), size)

    def offset_in(self, other):
        """Integer cell offset of this grid's lower corner inside `other`."""
        if not math.isclose(self.spacing, other.spacing, rel_tol=1e-9):
            raise ValueError("grids have different spacing")
        shift = (self.box.lower - other.box.lower) / other.spacing
        rounded = np.floor(shift + 0.5)
        if np.any(np.abs(shift - rounded) > 1e-6):
            raise ValueError("grids are not aligned")
        return tuple(int(v) for v in rounded)

    def is_aligned_with(self, other):
        try:
            self.offset_in(other)
        except ValueError:
            return False
        return True


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray
    compact: bool = True     # support hint: zero outside grid.box

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def sample(cls, grid, func, compact=True):
        """Sample func(points[M, n]) -> [M] at cell midpoints."""
        vals = np.asarray(func(grid.midpoints()), dtype=float)
        return cls(grid, vals.reshape(grid.shape), compact)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape), True)

    @cached_property
    def nonzero(self):
        return np.flatnonzero(self.values.ravel())

    def with_values(self, values, compact=None):
        return GridFunction(self.grid, values, self.compact if compact is None else compact)

    def _combine(self, other, op):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise ValueError("grid functions live on different grids")
            return GridFunction(self.grid, op(self.values, other.values), self.compact and other.compact)
        other = float(other)
        return GridFunction(self.grid, op(self.values, other), self.compact and other == 0.0)

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, c):
        return GridFunction(self.grid, self.values * float(c), self.compact)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __abs__(self):
        return GridFunction(self.grid, np.abs(self.values), self.compact)

    def sup_norm(self):
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def l1_norm(self):
        return math.fsum(np.abs(self.values).ravel()) * self.grid.cell_measure

    def cube_sample(self, q):
        """
        (values, weights) of f on snapped q. Weights are cell counts; cells of q
        outside the box enter as a single zero value carrying their count.
        """
        ranges = self.grid.index_range(q)
        if any(b - a < 1 for a, b in ranges):
            raise CubeBelowResolution(f"cube of side {q.side} snaps to no cell at spacing {self.grid.spacing}")
        total = math.prod(b - a for a, b in ranges)
        sl = self.grid.slices(q)
        inside = math.prod(s.stop - s.start for s in sl)
        if inside < total and not self.compact:
            raise CubeOutsideDomain(f"cube {q.to_dict()} leaves the grid box {self.grid.box.to_dict()}")
        vals = self.values[sl].ravel() if inside else np.zeros(0)
        weights = np.ones(len(vals))
        if total > inside:
            vals = np.append(vals, 0.0)
            weights = np.append(weights, float(total - inside))
        return vals, weights

    def sample_at(self, points):
        """Cell-constant lookup at arbitrary points"""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        idx = self.grid.locate(points)
        n = self.grid.cells
        # points on the upper face belong to the last cell
        on_face = np.isclose(points, self.grid.box.upper, rtol=0, atol=1e-12 * self.grid.box.side)
        idx = np.where(on_face & (idx == n), n - 1, idx)
        inside = np.all((idx >= 0) & (idx < n), axis=1)
        if not inside.all() and not self.compact:
            raise CubeOutsideDomain("sample point outside the grid box")
        out = np.zeros(len(points))
        if inside.any():
            out[inside] = self.values[tuple(idx[inside].T)]
        return out

    def embed(self, grid):
        """Zero extension onto an aligned grid containing this one."""
        if grid == self.grid:
            return self
        if not self.compact:
            raise CubeOutsideDomain("zero extension needs a compactly supported function")
        off = self.grid.offset_in(grid)
        if any(o < 0 or o + self.grid.cells > grid.cells for o in off):
            raise ValueError("target grid does not contain the source grid")
        out = np.zeros(grid.shape)
        out[tuple(slice(o, o + self.grid.cells) for o in off)] = self.values
        return GridFunction(grid, out, True)


def integrate(f, q):
    vals, weights = f.cube_sample(q)
    return math.fsum(vals * weights) * f.grid.cell_measure


def average(f, q):
    vals, weights = f.cube_sample(q)
    return math.fsum(vals * weights) / math.fsum(weights)


def restrict(f, q):
    """f·χ_q on f's grid"""
    if any(b - a < 1 for a, b in f.grid.index_range(q)):
        raise CubeBelowResolution(f"cube of side {q.side} snaps to no cell at spacing {f.grid.spacing}")
    out = np.zeros(f.grid.shape)
    sl = f.grid.slices(q)
    out[sl] = f.values[sl]
    return GridFunction(f.grid, out, True)


def gradient(f):
    """Finite-difference gradient: central inside, one-sided on the boundary."""
    if min(f.grid.shape) < 3:
        raise CubeBelowResolution("gradient needs at least 3 cells per axis")
    h = f.grid.spacing
    return [
        GridFunction(f.grid, np.gradient(f.values, h, axis=a, edge_order=2), f.compact)
        for a in range(f.grid.dim)
    ]


def gradient_norm(f):
    parts = gradient(f)
    return GridFunction(f.grid, np.sqrt(sum(p.values ** 2 for p in parts)), f.compact)


# ============================================================
# Serialization
# ============================================================

def write_csv(f, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["cell", "value"])
    for i, v in enumerate(f.values.ravel()):
        writer.writerow([i, format(float(v), ".17g")])


def read_csv(stream, grid, compact=True):
    reader = csv.reader(stream)
    header = next(reader)
    if header[:2] != ["cell", "value"]:
        raise ValueError(f"unexpected CSV header {header}")
    vals = np.zeros(grid.total_cells)
    seen = 0
    for row in reader:
        vals[int(row[0])] = float(row[1])
        seen += 1
    if seen != grid.total_cells:
        raise ValueError(f"expected {grid.total_cells} cells, read {seen}")
    return GridFunction(grid, vals.reshape(grid.shape), compact)


def to_bytes(f):
    """Header (magic, dim, N, box center, box side, compact) then little-endian float64 values."""
    g = f.grid
    header = BINARY_MAGIC + struct.pack("<BI?", g.dim, g.cells, f.compact)
    header += struct.pack(f"<{g.dim + 1}d", *g.box.center, g.box.side)
    return header + np.ascontiguousarray(f.values, dtype="<f8").tobytes()


def from_bytes(data):
    if data[:4] != BINARY_MAGIC:
        raise ValueError("not an oscdom grid function")
    dim, cells, compact = struct.unpack_from("<BI?", data, 4)
    offset = 4 + struct.calcsize("<BI?")
    box = struct.unpack_from(f"<{dim + 1}d", data, offset)
    offset += 8 * (dim + 1)
    grid = Grid(Cube(box[:dim], box[dim]), cells)
    vals = np.frombuffer(data, dtype="<f8", offset=offset, count=grid.total_cells)
    return GridFunction(grid, vals.reshape(grid.shape), compact)


def to_csv_text(f):
    buf = io.StringIO()
    write_csv(f, buf)
    return buf.getvalue()

"""
Cubes, dyadic trees, the 3^n shifted dyadic lattices and sparse families.

Cubes are closed and axis-aligned. Containment and overlap are decided up to a
tolerance of CONTAIN_TOL * side, boundaries have measure zero for every
quantity computed downstream.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CubeBelowResolution, InvariantViolation, OscdomError

logger = logging.getLogger(__name__)

CONTAIN_TOL = 1e-12
LATTICE_SHIFTS = (0.0, 1.0 / 3.0, 2.0 / 3.0)
# side(R) <= COVER_FACTOR * side(Q) for the cube returned by containing_dyadic
COVER_FACTOR = 6.0


@dataclass(frozen=True)
class Cube:
    center: tuple
    side: float

    def __post_init__(self):
        center = tuple(float(c) for c in np.atleast_1d(self.center))
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "side", float(self.side))
        if not (self.side > 0 and math.isfinite(self.side)):
            raise ValueError(f"cube side must be positive, got {self.side}")
        if len(center) not in (1, 2):
            raise ValueError(f"only n in {{1, 2}} is supported, got n={len(center)}")

    @classmethod
    def from_lower(cls, lower, side):
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        return cls(tuple(lower + side / 2.0), side)

    @property
    def dim(self):
        return len(self.center)

    @property
    def lower(self):
        return np.array(self.center) - self.side / 2.0

    @property
    def upper(self):
        return np.array(self.center) + self.side / 2.0

    def measure(self):
        return self.side ** self.dim

    def contains(self, other, tol=CONTAIN_TOL):
        slack = tol * max(self.side, other.side)
        return bool(np.all(other.lower >= self.lower - slack) and np.all(other.upper <= self.upper + slack))

    def contains_point(self, x, tol=CONTAIN_TOL):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        slack = tol * self.side
        return bool(np.all(x >= self.lower - slack) and np.all(x <= self.upper + slack))

    def overlaps(self, other, tol=CONTAIN_TOL):
        """True when the interiors intersect in positive measure"""
        slack = tol * max(self.side, other.side)
        lo = np.maximum(self.lower, other.lower)
        hi = np.minimum(self.upper, other.upper)
        return bool(np.all(hi - lo > slack))

    def to_dict(self):
        return {"center": list(self.center), "side": self.side, "dim": self.dim}

    @classmethod
    def from_dict(cls, data):
        cube = cls(tuple(data["center"]), data["side"])
        if "dim" in data and data["dim"] != cube.dim:
            raise ValueError("cube record: dim does not match center length")
        return cube


def dilate(q, factor):
    if not factor > 0:
        raise ValueError(f"dilation factor must be positive, got {factor}")
    return Cube(q.center, q.side * factor)


def children(q):
    """The 2^n half-side cubes partitioning q, in tree child order."""
    half = q.side / 2.0
    lower = q.lower
    return [
        Cube(tuple(lower + (np.array(bits) + 0.5) * half), half)
        for bits in itertools.product((0, 1), repeat=q.dim)
    ]


def star_factor(dim):
    """5√n, the dilation Q -> Q*"""
    return 5.0 * math.sqrt(dim)


# ============================================================
# Dyadic trees D(Q)
# ============================================================

@dataclass(frozen=True)
class DyadicTree:
    """
    D(root) truncated at max_depth. A node is (depth, index) with index an
    n-tuple in [0, 2^depth)^n; node cubes are computed on demand.
    """
    root: Cube
    max_depth: int

    def __post_init__(self):
        if self.max_depth < 0:
            raise ValueError("max_depth must be nonnegative")

    @property
    def dim(self):
        return self.root.dim

    @property
    def root_node(self):
        return (0, (0,) * self.dim)

    def cube(self, node):
        depth, index = node
        side = self.root.side / (2 ** depth)
        return Cube.from_lower(self.root.lower + np.array(index) * side, side)

    def is_leaf(self, node):
        return node[0] >= self.max_depth

    def children(self, node):
        depth, index = node
        if depth >= self.max_depth:
            return []
        return [
            (depth + 1, tuple(2 * m + b for m, b in zip(index, bits)))
            for bits in itertools.product((0, 1), repeat=self.dim)
        ]

    def parent(self, node):
        depth, index = node
        if depth == 0:
            return None
        return (depth - 1, tuple(m // 2 for m in index))

    def nodes(self, depth):
        return [(depth, idx) for idx in itertools.product(range(2 ** depth), repeat=self.dim)]

    def descendants(self, node):
        """Preorder walk of the subtree rooted at node (node included)."""
        stack = [node]
        while stack:
            current = stack.pop()
            yield current
            stack.extend(reversed(self.children(current)))

    def node_at(self, point, depth):
        point = np.atleast_1d(np.asarray(point, dtype=float))
        side = self.root.side / (2 ** depth)
        idx = np.floor((point - self.root.lower) / side).astype(int)
        idx = np.clip(idx, 0, 2 ** depth - 1)
        return (depth, tuple(int(i) for i in idx))

    def chain(self, point):
        """Nodes containing point, from the root down to a leaf"""
        return [self.node_at(point, d) for d in range(self.max_depth + 1)]

    def cell_slices(self, node, cells):
        """Index slices of node's cells on a grid of `cells` per axis over the root."""
        depth, index = node
        width = cells >> depth
        if width << depth != cells:
            raise CubeBelowResolution(f"{cells} cells per axis cannot resolve depth {depth}")
        return tuple(slice(m * width, (m + 1) * width) for m in index)

    def relative_slices(self, ancestor, node, cells):
        """Slices of node's cells inside the cell block of `ancestor`."""
        outer = self.cell_slices(ancestor, cells)
        inner = self.cell_slices(node, cells)
        return tuple(slice(i.start - o.start, i.stop - o.start) for o, i in zip(outer, inner))


# ============================================================
# Shifted dyadic lattices
# ============================================================

@dataclass(frozen=True)
class ShiftedLatticeSet:
    """
    The 3^n lattices D^t = {2^-k([0,1)^n + m + (-1)^k t)}, t in {0,1/3,2/3}^n.
    Lattice j uses the j-th shift vector in itertools.product order.
    """
    dim: int

    @property
    def lattices(self):
        return tuple(itertools.product(LATTICE_SHIFTS, repeat=self.dim))

    def __len__(self):
        return 3 ** self.dim

    def offset(self, j, k):
        t = np.array(self.lattices[j])
        return ((-1) ** k) * t * 2.0 ** (-k)

    def cube_at(self, j, k, m):
        side = 2.0 ** (-k)
        lower = side * np.asarray(m, dtype=float) + self.offset(j, k)
        return Cube.from_lower(lower, side)

    def locate(self, j, k, point):
        side = 2.0 ** (-k)
        point = np.atleast_1d(np.asarray(point, dtype=float))
        return tuple(int(v) for v in np.floor((point - self.offset(j, k)) / side))

    def is_member(self, j, cube, tol=1e-9):
        k = -math.log2(cube.side)
        if abs(k - round(k)) > tol:
            return False
        k = int(round(k))
        m = (cube.lower - self.offset(j, k)) / cube.side
        return bool(np.all(np.abs(m - np.round(m)) <= tol))

    def grid_offsets(self, j, length, level):
        """Per-axis integer offsets (in cells) of lattice j for blocks of `length` cells."""
        sign = -1 if level % 2 else 1
        return tuple(int(round(sign * t * length)) % length for t in self.lattices[j])


def containing_dyadic(q, lattices):
    """
    Three-lattice cover: a (lattice index, cube R) with q ⊆ R and
    side(R) <= 6 side(q).
    """
    if q.dim != lattices.dim:
        raise ValueError(f"cube dimension {q.dim} != lattice dimension {lattices.dim}")
    k0 = -math.ceil(math.log2(q.side) - 1e-12)
    for k in (k0, k0 - 1, k0 - 2):
        side = 2.0 ** (-k)
        if side > COVER_FACTOR * q.side * (1 + 1e-12):
            break
        for j in range(len(lattices)):
            R = lattices.cube_at(j, k, lattices.locate(j, k, q.center))
            if R.contains(q):
                return j, R
    raise OscdomError(f"three-lattice cover failed for {q}")


# ============================================================
# Sparse families
# ============================================================

@dataclass(frozen=True, eq=False)
class EPortion:
    """Cell set (flat indices on `grid`) reserved for one cube of a sparse family"""
    grid: object
    cells: np.ndarray

    def measure(self):
        return len(self.cells) * self.grid.cell_measure


@dataclass
class SparseEntry:
    cube: Cube
    e_portion: Optional[EPortion] = None
    weight: Optional[float] = None      # local stopping value alpha_P, when known
    tag: str = ""
    node: Optional[tuple] = None


@dataclass
class SparseFamily:
    entries: list = field(default_factory=list)
    eta: float = 0.5                     # target sparseness
    achieved_eta: Optional[float] = None
    verified: bool = False
    incomplete: bool = False
    coverage: tuple = ()                 # grids on which the family is evaluated

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def cubes(self):
        return [e.cube for e in self.entries]

    def to_dict(self):
        return {
            "cubes": [e.cube.to_dict() for e in self.entries],
            "eta": self.eta,
            "achievedEta": self.achieved_eta,
            "verified": self.verified,
            "incomplete": self.incomplete,
        }

    @classmethod
    def from_dict(cls, data):
        fam = cls([SparseEntry(Cube.from_dict(c)) for c in data["cubes"]], eta=data.get("eta", 0.5))
        fam.achieved_eta = data.get("achievedEta")
        fam.incomplete = data.get("incomplete", False)
        return fam


@dataclass
class AuditReport:
    achieved_eta: float
    assignments: list
    ratios: list


def audit_sparseness(fam, grid):
    """
    Assign disjoint E-portions and report min |E_Q|/|Q|.

    Pre-assigned portions are validated (inside their cube, pairwise disjoint);
    unassigned entries are served greedily on `grid`, smallest cube first.
    """
    entries = fam.entries
    assignments = [None] * len(entries)
    claimed = {}

    for i, entry in enumerate(entries):
        portion = entry.e_portion
        if portion is None:
            continue
        mask = claimed.setdefault(portion.grid, np.zeros(portion.grid.total_cells, dtype=bool))
        if len(portion.cells):
            mids = portion.grid.midpoints()[portion.cells]
            slack = CONTAIN_TOL * entry.cube.side
            if np.any(mids < entry.cube.lower - slack) or np.any(mids > entry.cube.upper + slack):
                raise InvariantViolation("lattice", "E-portion inside its cube", f"entry {i} ({entry.tag})")
            if mask[portion.cells].any():
                raise InvariantViolation("lattice", "pairwise disjoint E-portions", f"entry {i} ({entry.tag})")
            mask[portion.cells] = True
        assignments[i] = portion

    pending = [i for i, e in enumerate(entries) if e.e_portion is None]
    if pending:
        h = grid.spacing
        mask = claimed.setdefault(grid, np.zeros(grid.total_cells, dtype=bool))
        for i in sorted(pending, key=lambda i: (entries[i].cube.measure(), i)):
            cube = entries[i].cube
            if cube.side < 2 * h * (1 - 1e-9):
                raise CubeBelowResolution(f"cube of side {cube.side} spans fewer than 2 cells of size {h}")
            cells = grid.cells_in(cube)
            free = cells[~mask[cells]]
            mask[free] = True
            assignments[i] = EPortion(grid, free)

    used = [g for g, m in claimed.items() if m.any()]
    for a, b in itertools.combinations(used, 2):
        if a.box.overlaps(b.box):
            raise InvariantViolation("lattice", "pairwise disjoint E-portions", "E-portions on overlapping grids")

    ratios = [p.measure() / e.cube.measure() for p, e in zip(assignments, entries)]
    achieved = min(ratios) if ratios else 1.0
    fam.achieved_eta = achieved
    fam.verified = True
    logger.debug("[Audit] %d cubes, achieved eta %.6g", len(entries), achieved)
    return AuditReport(achieved, assignments, ratios)

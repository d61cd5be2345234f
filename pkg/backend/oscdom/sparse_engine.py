"""
Sparse domination engine.

The local family f_Q = T((f - m_f(Q*))χ_{Q*}) feeds a stopping-time
construction on D(Q0) with λ_n = 2^{-n-3}; assemble_global runs it on every
cube of the ring partition of R^n around the starting cube S and returns the
dilated cubes P* with their reserved portions E_P. Reports compare |Tf|
against Σ Ω(f;Q)χ_Q and Σ ⟨|f|⟩_Q χ_Q on the evaluation grids.
"""

import itertools
import logging
import math
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import EngineConfig
from .czo import apply_at
from .errors import (
    DepthExhausted,
    DomainTooSmall,
    InvariantViolation,
    RingBudgetExceeded,
    SupportNotContained,
    UnauditedFamily,
)
from .field import Grid, GridFunction, restrict
from .lattice import (
    Cube,
    DyadicTree,
    EPortion,
    ShiftedLatticeSet,
    SparseEntry,
    SparseFamily,
    audit_sparseness,
    dilate,
    star_factor,
)
from .local_stats import (
    average_abs,
    hl_maximal,
    mean_oscillation,
    median,
    sharp_maximal_field,
    weighted_rearrangement,
)

logger = logging.getLogger(__name__)

__all__ = [
    "EngineConfig",
    "LocalFamily",
    "build_local_family",
    "local_sparse",
    "assemble_global",
    "eval_oscillation_bound",
    "eval_average_bound",
    "domination_report",
]

BOUND_KINDS = ("oscillation", "average")


def _node_tag(node):
    depth, index = node
    return f"d{depth}:" + ",".join(str(i) for i in index)


# ============================================================
# Local family
# ============================================================

class LocalFamily:
    """
    Q ↦ f_Q on the cells of Q, for the nodes of one dyadic tree.

    `grid` resolves the tree root; f_Q is evaluated at the midpoints of the
    piece-grid cells inside Q and memoized per node.
    """

    def __init__(self, f, T, tree, grid):
        self.f = f
        self.T = T
        self.tree = tree
        self.grid = grid
        self.factor = star_factor(tree.dim)
        self._values = {}
        self._medians = {}
        self._lock = threading.Lock()

    def star(self, node):
        return dilate(self.tree.cube(node), self.factor)

    def median(self, node):
        m = self._medians.get(node)
        if m is None:
            m = median(self.f, self.star(node))
            with self._lock:
                m = self._medians.setdefault(node, m)
        return m

    def source(self, node):
        """(f - m_f(Q*))χ_{Q*} as a compactly supported grid function"""
        star = self.star(node)
        m = self.median(node)
        if m == 0.0:
            return restrict(self.f, star)
        big = self.f.grid.enlarge(star)
        vals = np.zeros(big.shape)
        sl = big.slices(star)
        vals[sl] = self.f.embed(big).values[sl] - m
        return GridFunction(big, vals, True)

    def node_grid(self, node):
        return Grid(self.tree.cube(node), self.grid.cells >> node[0])

    def values(self, node):
        cached = self._values.get(node)
        if cached is not None:
            return cached
        vals = apply_at(self.T, self.source(node), self.node_grid(node)).values
        with self._lock:
            return self._values.setdefault(node, vals)

    def cached_nodes(self):
        return len(self._values)


def build_local_family(f, T, tree, grid=None):
    grid = grid or Grid(tree.root, f.grid.cells)
    if grid.box != tree.root:
        raise ValueError("the piece grid must resolve the tree root")
    if grid.cells % (2 ** tree.max_depth):
        raise DomainTooSmall(f"{grid.cells} cells per axis cannot resolve depth {tree.max_depth}")
    if not f.compact and not f.grid.box.contains(dilate(tree.root, star_factor(tree.dim))):
        raise DomainTooSmall("Q0* leaves the computation box of a function without compact support")
    return LocalFamily(f, T, tree, grid)


# ============================================================
# Stopping time
# ============================================================

def _select_maximal(tree, node, exceptional, cells, fraction):
    """Maximal strict descendants R of node with |R ∩ E| > fraction·|R|, in DFS order"""
    selected = []
    stack = list(reversed(tree.children(node)))
    while stack:
        r = stack.pop()
        block = exceptional[tree.relative_slices(node, r, cells)]
        hits = int(np.count_nonzero(block))
        if hits > fraction * block.size:
            selected.append(r)
        elif hits and not tree.is_leaf(r):
            stack.extend(reversed(tree.children(r)))
    return selected


def stopping_value(fp, msharp, lam):
    """α_P = (f_Pχ_P)*(λ|P|) + (m_P^# f)*(λ|P|)"""
    ones = np.ones(fp.size)
    return (weighted_rearrangement(fp.ravel(), ones, lam)
            + weighted_rearrangement(msharp.ravel(), ones, lam))


def local_sparse(family, cfg, root=None, strict=False):
    """
    Stopping-time family S ⊂ D(Q0). Each entry carries α_P as its weight and
    E_P = P minus its selected children as its reserved portion.
    """
    tree, grid = family.tree, family.grid
    if tree.max_depth < 1:
        raise DepthExhausted("the stopping time needs a tree of depth >= 1")
    cells = grid.cells
    lam, slack, fraction = cfg.lambda_n, cfg.stopping_slack, cfg.selection_fraction
    root = root or tree.root_node

    entries = []
    incomplete = False
    queue = deque([root])
    while queue:
        node = queue.popleft()
        fp = family.values(node)
        msharp = sharp_maximal_field(family, tree, node)
        alpha = stopping_value(fp, msharp, lam)
        exceptional = (np.abs(fp) > slack * alpha) | (msharp > slack * alpha)
        selected = _select_maximal(tree, node, exceptional, cells, fraction)

        chosen = 0
        free = np.ones(fp.shape, dtype=bool)
        for r in selected:
            sl = tree.relative_slices(node, r, cells)
            free[sl] = False
            chosen += free[sl].size
        if chosen * fraction > 2.0 * lam * fp.size:
            raise InvariantViolation(
                "sparse_engine", "selected children measure <= 2^{-n-1}|P|",
                f"{chosen} of {fp.size} cells selected at {_node_tag(node)}",
            )

        base = tree.cell_slices(node, cells)
        local = np.nonzero(free)
        ids = np.ravel_multi_index(tuple(ix + s.start for ix, s in zip(local, base)), grid.shape)
        entries.append(SparseEntry(tree.cube(node), EPortion(grid, ids), alpha, _node_tag(node), node))

        if tree.is_leaf(node) and exceptional.any():
            incomplete = True
        queue.extend(selected)

    if incomplete and strict:
        raise DepthExhausted(f"stopping time reached depth {tree.max_depth} with a nonempty exceptional set")
    fam = SparseFamily(entries, eta=0.5, incomplete=incomplete, coverage=(grid,))
    audit_sparseness(fam, grid)
    logger.debug("[Engine] local family: %d cubes, eta %.4g, incomplete=%s",
                 len(entries), fam.achieved_eta, incomplete)
    return fam


def local_bound_constant(family, sparse, tolerance=1e-8):
    """
    (C, uncovered): smallest C with |f_{Q0}| <= C·Σ α_P χ_P on the root cells
    where the sum is positive, and the number of cells where it vanishes while
    f_{Q0} does not.
    """
    tree, cells = family.tree, family.grid.cells
    root = tree.root_node
    f0 = np.abs(family.values(root))
    bound = np.zeros_like(f0)
    for entry in sparse.entries:
        bound[tree.relative_slices(root, entry.node, cells)] += entry.weight
    valid = bound > 0
    best = float(np.max(f0[valid] / bound[valid])) if valid.any() else 0.0
    top = float(f0.max()) if f0.size else 0.0
    uncovered = int(np.count_nonzero(~valid & (f0 > tolerance * top)))
    return best, uncovered


# ============================================================
# Global assembly over the ring partition
# ============================================================

@dataclass
class PieceResult:
    index: int
    ring: int
    cube: Cube
    family: LocalFamily
    sparse: SparseFamily


def ring_partition(start, rings):
    """S, then for k = 1..rings the 3^n - 1 cubes of side 3^{k-1}s tiling 3^kS \\ 3^{k-1}S"""
    pieces = [(0, start)]
    center = np.array(start.center)
    for k in range(1, rings + 1):
        side = start.side * 3 ** (k - 1)
        for offset in itertools.product((-1, 0, 1), repeat=start.dim):
            if any(offset):
                pieces.append((k, Cube(tuple(center + np.array(offset) * side), side)))
    return pieces


def _check_support(f, start):
    nz = f.nonzero
    if len(nz) == 0:
        return
    mids = f.grid.midpoints()[nz]
    slack = 1e-12 * start.side
    if np.any(mids < start.lower - slack) or np.any(mids > start.upper + slack):
        raise SupportNotContained("supp f is not contained in the starting cube")


def assemble_global(f, T, cfg, ring_count=None, start=None, collector=None):
    """
    Union over the ring partition of the local families, every cube replaced
    by its dilation P*. Pieces other than S get grids of cfg.ring_cells cells
    (default: the cells of f's grid).
    """
    n = f.grid.dim
    if cfg.dim != n:
        raise ValueError(f"engine configured for n={cfg.dim}, function is {n}-D")
    rings = cfg.rings if ring_count is None else ring_count
    if rings < 1:
        raise ValueError("ring count must be >= 1")
    start = start or f.grid.box
    _check_support(f, start)
    c = cfg.dilation_factor

    entries, grids, incomplete, sup_tf = [], [], False, 0.0
    for index, (k, q) in enumerate(ring_partition(start, rings)):
        star = dilate(q, c)
        if k > 0 and not (dilate(q, 3.0).contains(start) and star.contains(dilate(q, 3.0))):
            raise InvariantViolation("sparse_engine", "S ⊂ 3Q_j ⊂ Q_j*", f"piece {index}")
        if median(f, star) != 0.0:
            raise InvariantViolation("sparse_engine", "m_f(Q_j*) = 0", f"piece {index}")

        if k == 0 and q == f.grid.box:
            grid = f.grid
        else:
            grid = Grid(q, f.grid.cells if k == 0 else (cfg.ring_cells or f.grid.cells))
        depth = min(cfg.max_depth, int(math.log2(grid.cells)) - 2)
        if depth < 1:
            raise DomainTooSmall(f"{grid.cells} cells per axis leave no room for a dyadic tree")
        tree = DyadicTree(q, depth)
        family = build_local_family(f, T, tree, grid)
        local = local_sparse(family, cfg)
        sup_tf = max(sup_tf, float(np.max(np.abs(family.values(tree.root_node)))))
        incomplete = incomplete or local.incomplete
        for e in local.entries:
            entries.append(SparseEntry(dilate(e.cube, c), e.e_portion, e.weight, f"piece{index}:{e.tag}", e.node))
        grids.append(grid)
        if collector is not None:
            collector.append(PieceResult(index, k, q, family, local))

    kernel = T.kernel
    if kernel is not None and not kernel.is_zero:
        reach = (3 ** rings - 1) * start.side / 2.0
        tail = f.l1_norm() * kernel.decay_bound(reach)
        if tail > 0 and tail > cfg.tail_tolerance * sup_tf:
            raise RingBudgetExceeded(
                f"|Tf| beyond {rings} rings may reach {tail:.3g} (> {cfg.tail_tolerance} x {sup_tf:.3g})"
            )

    fam = SparseFamily(entries, eta=cfg.target_eta, incomplete=incomplete, coverage=tuple(grids))
    audit_sparseness(fam, f.grid)
    logger.info("[Engine] %s: %d cubes over %d pieces, eta %.4g (target %.4g)",
                T.label, len(entries), len(grids), fam.achieved_eta, cfg.target_eta)
    return fam


# ============================================================
# Sparse bounds
# ============================================================

def _coefficient(f, cube, kind):
    if kind == "oscillation":
        return mean_oscillation(f, cube)
    if kind == "average":
        return average_abs(f, cube)
    raise ValueError(f"unknown bound kind '{kind}', expected one of {BOUND_KINDS}")


def bound_field(S, f, grid, kind="oscillation", entries=None):
    """Σ_Q c_Q χ_Q on the cells of grid, c_Q = Ω(f;Q) or ⟨|f|⟩_Q"""
    out = np.zeros(grid.shape)
    coefficients = {}
    for entry in (S.entries if entries is None else entries):
        cube = entry.cube
        if cube not in coefficients:
            coefficients[cube] = _coefficient(f, cube, kind)
        out[grid.slices(cube)] += coefficients[cube]
    return out


def _eval_bound(S, f, x, kind):
    terms = [_coefficient(f, e.cube, kind) for e in S.entries if e.cube.contains_point(x)]
    return math.fsum(terms)


def eval_oscillation_bound(S, f, x):
    return _eval_bound(S, f, x, "oscillation")


def eval_average_bound(S, f, x):
    return _eval_bound(S, f, x, "average")


@dataclass
class DominationReport:
    kind: str
    family: SparseFamily
    abs_tf: np.ndarray
    bound: np.ndarray
    ratios: np.ndarray            # NaN where the bound vanishes
    best_constant: float
    violations: np.ndarray        # indices into the concatenated cell arrays
    midpoints: np.ndarray
    refinement_tag: str = ""

    @property
    def cell_count(self):
        return len(self.abs_tf)

    @property
    def violation_fraction(self):
        return len(self.violations) / self.cell_count if self.cell_count else 0.0

    @property
    def valid_count(self):
        return int(np.count_nonzero(~np.isnan(self.ratios)))

    def summary(self):
        return {
            "kind": self.kind,
            "bestConstant": self.best_constant,
            "violationFraction": self.violation_fraction,
            "violations": len(self.violations),
            "cells": self.cell_count,
            "achievedEta": self.family.achieved_eta,
            "incomplete": self.family.incomplete,
            "refinement": self.refinement_tag,
        }


def domination_report(T, f, S, kind="oscillation", tolerance=1e-8):
    if not S.verified:
        raise UnauditedFamily("domination reports need an audited family")
    grids = S.coverage or (f.grid,)
    tf_parts, bound_parts, mids = [], [], []
    for grid in grids:
        tf_parts.append(np.abs(apply_at(T, f, grid).values).ravel())
        bound_parts.append(bound_field(S, f, grid, kind).ravel())
        mids.append(grid.midpoints())
    abs_tf = np.concatenate(tf_parts)
    bound = np.concatenate(bound_parts)
    top = float(abs_tf.max()) if abs_tf.size else 0.0

    valid = bound > 0
    ratios = np.full(abs_tf.shape, np.nan)
    ratios[valid] = abs_tf[valid] / bound[valid]
    best = float(np.max(ratios[valid])) if valid.any() else 0.0
    violations = np.flatnonzero(~valid & (abs_tf > tolerance * top))
    tag = "N=" + ",".join(str(g.cells) for g in grids[:1])
    report = DominationReport(kind, S, abs_tf, bound, ratios, best, violations, np.concatenate(mids), tag)
    logger.info("[Report] %s %s bound: C=%.6g, violations %d/%d",
                T.label, kind, best, len(violations), report.cell_count)
    return report


# ============================================================
# Recorded constants from the proof chain
# ============================================================

def interior_ratio(S, f, grid, core, inner):
    """
    (interior, whole): max over cells of `grid` inside `inner` of the ratio
    oscillation-bound/average-bound. `interior` uses only the emitted cubes
    contained in `core` and only the inner cells they cover; it is inf when
    none of them reaches `inner`. `whole` uses the full family.
    """
    mask = np.zeros(grid.shape, dtype=bool)
    mask[grid.slices(inner)] = True
    sub = [e for e in S.entries if core.contains(e.cube)]

    covered = np.zeros(grid.shape, dtype=bool)
    for e in sub:
        covered[grid.slices(e.cube)] = True
    covered &= mask
    whole = _max_ratio(S, f, grid, S.entries, mask)
    if not covered.any():
        return math.inf, whole
    return _max_ratio(S, f, grid, sub, covered), whole


def _max_ratio(S, f, grid, entries, cells):
    osc = bound_field(S, f, grid, "oscillation", entries)[cells]
    avg = bound_field(S, f, grid, "average", entries)[cells]
    ok = avg > 0
    return float(np.max(osc[ok] / avg[ok])) if ok.any() else 0.0


def rearrangement_vs_oscillation(pieces, f, cfg):
    """max over stopping cubes P of (f_Pχ_P)*(λ|P|) / Ω(f;P*)"""
    best = 0.0
    for piece in pieces:
        for entry in piece.sparse.entries:
            fp = piece.family.values(entry.node)
            r = weighted_rearrangement(fp.ravel(), np.ones(fp.size), cfg.lambda_n)
            if r == 0.0:
                continue
            osc = mean_oscillation(f, piece.family.star(entry.node))
            best = max(best, r / osc if osc > 0 else math.inf)
    return best


def sharp_domination(pieces, f, cfg):
    """
    Smallest C with m_P^# f <= C·M((f - m_f(P*))χ_{P*}) on the cells of every
    stopping cube P of the starting piece.
    """
    lattices = ShiftedLatticeSet(f.grid.dim)
    best = 0.0
    for piece in pieces:
        if piece.ring != 0:
            continue
        family, tree = piece.family, piece.family.tree
        for entry in piece.sparse.entries:
            msharp = sharp_maximal_field(family, tree, entry.node).ravel()
            if not msharp.any():
                continue
            maximal = hl_maximal(family.source(entry.node), lattices)
            m = maximal.sample_at(family.node_grid(entry.node).midpoints())
            hit = msharp > 0
            if np.any(hit & (m <= 0)):
                return math.inf
            best = max(best, float(np.max(msharp[hit] / m[hit])))
    logger.debug("[Engine] sharp domination constant %.6g", best)
    return best

"""
Local statistics on cubes: medians, non-increasing rearrangements, mean and
median oscillations, and the two maximal functions used by the sparse engine.

All cube statistics work on weighted samples (value, cell count) so that the
zero exterior of a compactly supported function is handled without
materializing it.
"""

import logging
import math

import numpy as np

from .errors import DepthExhausted, LambdaOutOfRange

logger = logging.getLogger(__name__)


# ============================================================
# Weighted sample primitives
# ============================================================

def weighted_median(values, weights):
    """Lower median: smallest value m with w{v<m} <= W/2 and w{v>m} <= W/2."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    order = np.argsort(values, kind="stable")
    v, w = values[order], weights[order]
    half = math.fsum(w) / 2.0
    cum = np.cumsum(w)
    # cell counts are integers, so the cumulative sums are exact
    i = int(np.searchsorted(cum, half, side="left"))
    return float(v[min(i, len(v) - 1)])


def weighted_rearrangement(values, weights, lam):
    """
    (f·χ_Q)*(λ|Q|): the least α >= 0 with w{|v| > α} <= λ·W.
    """
    if not 0.0 < lam <= 1.0:
        raise LambdaOutOfRange(f"lambda must lie in (0, 1], got {lam}")
    a = np.abs(np.asarray(values, dtype=float))
    weights = np.asarray(weights, dtype=float)
    budget = lam * math.fsum(weights)
    uniq, inverse = np.unique(a, return_inverse=True)
    w_per = np.bincount(inverse.ravel(), weights=weights.ravel(), minlength=len(uniq))
    # above[i] = weight of values strictly greater than uniq[i]
    above = np.concatenate([np.cumsum(w_per[::-1])[::-1][1:], [0.0]])
    ok = np.flatnonzero(above <= budget)
    alpha = float(uniq[ok[0]])
    total_above_zero = math.fsum(w_per[uniq > 0])
    if total_above_zero <= budget:
        return 0.0
    return alpha


def weighted_mean(values, weights):
    return math.fsum(np.asarray(values) * weights) / math.fsum(weights)


# ============================================================
# Cube statistics
# ============================================================

def median(f, q):
    vals, weights = f.cube_sample(q)
    return weighted_median(vals, weights)


def rearrangement(f, q, lam):
    if not 0.0 < lam <= 1.0:
        raise LambdaOutOfRange(f"lambda must lie in (0, 1], got {lam}")
    vals, weights = f.cube_sample(q)
    return weighted_rearrangement(vals, weights, lam)


def mean_oscillation(f, q):
    """Ω(f; Q) = ⟨|f - ⟨f⟩_Q|⟩_Q"""
    vals, weights = f.cube_sample(q)
    avg = weighted_mean(vals, weights)
    return math.fsum(np.abs(vals - avg) * weights) / math.fsum(weights)


def median_oscillation(f, q):
    vals, weights = f.cube_sample(q)
    m = weighted_median(vals, weights)
    return math.fsum(np.abs(vals - m) * weights) / math.fsum(weights)


def average_abs(f, q):
    vals, weights = f.cube_sample(q)
    return math.fsum(np.abs(vals) * weights) / math.fsum(weights)


# ============================================================
# Maximal functions
# ============================================================

def _summed_area(a):
    s = a
    for axis in range(a.ndim):
        s = np.cumsum(s, axis=axis)
    return np.pad(s, [(1, 0)] * a.ndim)


def _block_sums(sat, bounds):
    """Sums over per-cell boxes [lo_a, hi_a) given as (lo, hi) index arrays per axis."""
    if len(bounds) == 1:
        (lo, hi), = bounds
        return sat[hi] - sat[lo]
    (lx, hx), (ly, hy) = bounds
    lx, hx = lx[:, None], hx[:, None]
    ly, hy = ly[None, :], hy[None, :]
    return sat[hx, hy] - sat[lx, hy] - sat[hx, ly] + sat[lx, ly]


def hl_maximal(f, lattices):
    """
    Dyadic Hardy–Littlewood maximal function over the shifted lattices, in
    cell units: averages of |f| over lattice blocks of 1, 2, 4, ... cells,
    with f taken as zero outside the grid.
    """
    a = np.abs(f.values)
    n = a.shape[0]
    sat = _summed_area(a)
    idx = np.arange(n)
    out = a.copy()
    top = int(math.ceil(math.log2(max(n, 1)))) + 1
    for level in range(1, top + 1):
        length = 2 ** level
        volume = float(length ** a.ndim)
        for j in range(len(lattices)):
            bounds = []
            for o in lattices.grid_offsets(j, length, level):
                block_lo = o + ((idx - o) // length) * length
                bounds.append((np.clip(block_lo, 0, n), np.clip(block_lo + length, 0, n)))
            np.maximum(out, _block_sums(sat, bounds) / volume, out=out)
    return f.with_values(out)


def sharp_maximal_field(family, tree, node):
    """
    m_Q^# on the cells of `node`: for each cell, the largest oscillation
    osc_R(f_Q - f_R) over tree descendants R of node containing the cell.
    `family.values(node)` must return f_node on the node's cells.
    """
    cells = family.grid.cells
    fq = family.values(node)
    out = np.zeros_like(fq)
    for r in tree.descendants(node):
        if r == node:
            continue
        sl = tree.relative_slices(node, r, cells)
        diff = fq[sl] - family.values(r)
        osc = float(diff.max() - diff.min())
        np.maximum(out[sl], osc, out=out[sl])
    return out


def sharp_maximal(family, tree, x, node=None):
    """m_Q^#(x) at the cell with (global, per-axis) index x of family.grid."""
    if tree.max_depth == 0:
        raise DepthExhausted("sharp maximal function needs a tree of depth >= 1")
    node = node or tree.root_node
    field = sharp_maximal_field(family, tree, node)
    base = tree.cell_slices(node, family.grid.cells)
    local = tuple(int(i) - s.start for i, s in zip(x, base))
    return float(field[local])

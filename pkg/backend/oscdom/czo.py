"""
Calderón–Zygmund operators on grids.

Tf(x) is evaluated at cell midpoints as Σ_cells f(cell)·∫_cell K(x, y) dy plus
b(x)f(x). Kernels with a closed-form antiderivative give exact cell integrals;
midpoint-rule kernels drop the singular cell when they are odd convolution
kernels (symmetric principal value of a constant).
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.signal import fftconvolve

from .builtin.control import ZeroKernel
from .core import OperatorSpec, SumDiagonal
from .errors import (
    DimensionUnsupported,
    DomainTooSmall,
    NoDiagonalPart,
    SingularCellUnhandled,
    TailNotConvergent,
)
from .field import Grid, GridFunction
from .lattice import Cube, dilate, star_factor
from .rng import stream

logger = logging.getLogger(__name__)

DIRECT_BLOCK = 4_000_000        # matrix entries per chunk of a direct sum
MAX_ANNULI = 400
TAIL_TERMS = 200
VIOLATION_SLACK = 1e-6


def _kernel_of(T):
    return T.kernel if isinstance(T, OperatorSpec) else T


def _check_dim(kernel, grid):
    if kernel.dim is not None and kernel.dim != grid.dim:
        raise DimensionUnsupported(f"kernel '{kernel.label}' is {kernel.dim}-D, grid is {grid.dim}-D")


# ============================================================
# Cell integrals
# ============================================================

@lru_cache(maxsize=16)
def _offset_weights(kernel, cells, spacing, dim):
    """w[k] = ∫_{cell centred at 0} K(k·h, y) dy for k in [-(N-1), N-1]^n"""
    k = np.arange(-(cells - 1), cells) * spacing
    mesh = np.meshgrid(*([k] * dim), indexing="ij")
    targets = np.stack([m.ravel() for m in mesh], axis=-1)
    half = np.full((1, dim), spacing / 2.0)
    w = kernel.box_integral(targets, -half, half)[:, 0]
    return w.reshape((2 * cells - 1,) * dim)


def _fft_apply(kernel, values, grid):
    w = _offset_weights(kernel, grid.cells, grid.spacing, grid.dim)
    full = fftconvolve(values, w, mode="full")
    n = grid.cells
    return full[(slice(n - 1, 2 * n - 1),) * grid.dim]


def _cell_matrix(kernel, targets, centers, h):
    """[M, C] matrix of ∫_cell K(x_i, y) dy"""
    half = h / 2.0
    if kernel.has_antiderivative:
        return kernel.box_integral(targets, centers - half, centers + half)
    delta = targets[:, None, :] - centers[None, :, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        mat = kernel.evaluate(targets[:, None, :], centers[None, :, :]) * h ** targets.shape[1]
    singular = np.all(np.abs(delta) < half, axis=-1)
    if singular.any():
        if not (kernel.is_convolution and kernel.is_odd):
            raise SingularCellUnhandled(
                f"kernel '{kernel.label}' has no antiderivative and no cancellation rule for its singular cell"
            )
        mat[singular] = 0.0
    return mat


def _direct(kernel, targets, f):
    src = f.nonzero
    out = np.zeros(len(targets))
    if len(src) == 0:
        return out
    centers = f.grid.midpoints()[src]
    vals = f.values.ravel()[src]
    step = max(1, DIRECT_BLOCK // len(src))
    for start in range(0, len(targets), step):
        mat = _cell_matrix(kernel, targets[start:start + step], centers, f.grid.spacing)
        out[start:start + step] = (mat * vals).sum(axis=1)
    return out


def _fft_pays_off(big, targets, sources):
    fft_cost = 4.0 * big.total_cells * max(1.0, math.log2(big.total_cells))
    return fft_cost < targets.total_cells * max(sources, 1)


def apply(T, f):
    """Tf at the cell midpoints of f's grid"""
    grid = f.grid
    out = np.zeros(grid.shape)
    kernel = T.kernel
    if kernel is not None and not kernel.is_zero:
        _check_dim(kernel, grid)
        if kernel.is_convolution and kernel.has_antiderivative:
            out += _fft_apply(kernel, f.values, grid)
        else:
            out += _direct(kernel, grid.midpoints(), f).reshape(grid.shape)
    if T.diagonal is not None:
        out += T.diagonal(grid.midpoints()).reshape(grid.shape) * f.values
    return GridFunction(grid, out, compact=False)


def apply_at(T, f, targets):
    """Tf at the cell midpoints of another grid `targets`"""
    if targets == f.grid:
        return apply(T, f)
    out = np.zeros(targets.shape)
    kernel = T.kernel
    if kernel is not None and not kernel.is_zero:
        _check_dim(kernel, targets)
        done = False
        if kernel.is_convolution and kernel.has_antiderivative and f.compact and targets.is_aligned_with(f.grid):
            big = f.grid.enlarge(targets.box)
            if _fft_pays_off(big, targets, len(f.nonzero)):
                vals = _fft_apply(kernel, f.embed(big).values, big)
                off = targets.offset_in(big)
                out += vals[tuple(slice(o, o + targets.cells) for o in off)]
                done = True
        if not done:
            out += _direct(kernel, targets.midpoints(), f).reshape(targets.shape)
    if T.diagonal is not None:
        mids = targets.midpoints()
        out += (T.diagonal(mids) * f.sample_at(mids)).reshape(targets.shape)
    return GridFunction(targets, out, compact=False)


# ============================================================
# Kernel smoothness audit
# ============================================================

@dataclass
class SmoothnessReport:
    label: str
    samples: int
    max_ratio: float
    violation: bool
    worst: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "kernel": self.label,
            "samples": self.samples,
            "maxRatio": self.max_ratio,
            "violation": self.violation,
            "worst": self.worst,
        }


def _unit_vectors(rng, count, dim):
    v = rng.normal(size=(count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def kernel_smoothness_check(K, samples=100_000, rng=None):
    """
    Sample admissible triples (x, x', y), |x - x'| < |x - y|/2, and report the
    largest |K(x,y) - K(x',y)| / (ω(|x-x'|/|x-y|)·|x-y|^-n).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    K = _kernel_of(K)
    rng = rng if rng is not None else stream(0, "kernel-audit", K.label)
    dim = K.dim or 1
    x = rng.uniform(-1.0, 1.0, size=(samples, dim))
    r = 10.0 ** rng.uniform(-3.0, 3.0, size=samples)
    y = x + r[:, None] * _unit_vectors(rng, samples, dim)
    rho = rng.uniform(0.0, 0.5, size=samples) * r
    xp = x + rho[:, None] * _unit_vectors(rng, samples, dim)
    dist = np.linalg.norm(x - y, axis=1)
    t = np.linalg.norm(x - xp, axis=1) / dist

    num = np.abs(K.evaluate(x, y) - K.evaluate(xp, y))
    den = K.modulus()(t) * dist ** (-dim)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0, num / den, np.where(num > 0, np.inf, 0.0))
    worst = int(np.argmax(ratio))
    max_ratio = float(ratio[worst])
    report = SmoothnessReport(
        K.label, samples, max_ratio, max_ratio > 1.0 + VIOLATION_SLACK,
        {"x": x[worst].tolist(), "xPrime": xp[worst].tolist(), "y": y[worst].tolist()},
    )
    logger.info("[Audit] kernel %s: max ratio %.6g over %d triples", K.label, max_ratio, samples)
    return report


# ============================================================
# Kernel tail F_Q and the constant c_Q
# ============================================================

def _annulus_boxes(outer, inner):
    """Boxes (lower[B, n], upper[B, n]) partitioning outer \\ inner"""
    ol, ou, il, iu = outer.lower, outer.upper, inner.lower, inner.upper
    if outer.dim == 1:
        lower = np.array([[ol[0]], [iu[0]]])
        upper = np.array([[il[0]], [ou[0]]])
        return lower, upper
    lower = np.array([[ol[0], ol[1]], [ol[0], iu[1]], [ol[0], il[1]], [iu[0], il[1]]])
    upper = np.array([[ou[0], il[1]], [ou[0], ou[1]], [il[0], iu[1]], [ou[0], iu[1]]])
    return lower, upper


def _quad_box(kernel, x, lower, upper):
    """Adaptive quadrature of K(x, ·) over a box away from x"""
    if kernel.dim == 1:
        value, _ = integrate.quad(lambda y: float(kernel.evaluate(x, np.array([y]))), lower[0], upper[0], limit=200)
        return value
    value, _ = integrate.dblquad(
        lambda y2, y1: float(kernel.evaluate(x, np.array([y1, y2]))),
        lower[0], upper[0], lower[1], upper[1],
    )
    return value


def _ring_integrals(kernel, points, lower, upper):
    if kernel.has_antiderivative:
        return kernel.box_integral(points, lower, upper).sum(axis=1)
    return np.array([
        sum(_quad_box(kernel, p, lo, hi) for lo, hi in zip(lower, upper))
        for p in points
    ])


def _tail_bound(kernel, q, k):
    """Modulus bound on Σ_{j>k} of the annulus contributions"""
    n, s = q.dim, q.side
    c = star_factor(n)
    omega = kernel.modulus()
    total = 0.0
    for j in range(k + 1, k + 1 + TAIL_TERMS):
        d = 2.0 ** (j - 1) * c * s / 2.0 - s / 2.0
        total += float(omega(math.sqrt(n) * s / (2.0 * d))) * (2.0 ** j * c * s) ** n / d ** n
    return total


def tail_integrals(K, q, points, tol=1e-6):
    """F_Q(x) = ∫_{R^n \\ Q*} (K(x_Q, y) - K(x, y)) dy for each x in points[M, n]"""
    kernel = _kernel_of(K)
    if not math.isfinite(kernel.modulus().dini_integral):
        raise TailNotConvergent(f"kernel '{kernel.label}' has no finite Dini integral")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    for p in points:
        if not q.contains_point(p):
            raise ValueError(f"tail point {p.tolist()} is not in the cube")
    star = dilate(q, star_factor(q.dim))
    center = np.array([q.center])
    total = np.zeros(len(points))
    k = 1
    while True:
        lower, upper = _annulus_boxes(dilate(star, 2.0 ** k), dilate(star, 2.0 ** (k - 1)))
        total += _ring_integrals(kernel, center, lower, upper)[0] - _ring_integrals(kernel, points, lower, upper)
        if _tail_bound(kernel, q, k) < tol:
            break
        k += 1
        if k > MAX_ANNULI:
            raise TailNotConvergent(f"tail bound above {tol} after {MAX_ANNULI} annuli")
    logger.debug("[Tail] %d annuli for side %.4g", k, q.side)
    return total


def tail_integral_FQ(K, q, x, tol=1e-6):
    return float(tail_integrals(K, q, [np.atleast_1d(x)], tol)[0])


def _indicator_grid(q, cells):
    n = q.dim
    if cells is None:
        cells = 2000 if n == 1 else 200
    return Grid(dilate(q, star_factor(n)), cells)


def indicator_oscillation(T, q, cells=None):
    """max - min over the cells of q of T(χ_{Q*}), Q* resolved by its own grid"""
    grid = _indicator_grid(q, cells)
    tf = apply(T, GridFunction(grid, np.ones(grid.shape), True))
    vals = tf.values[grid.slices(q)]
    return float(vals.max() - vals.min())


def cr_constant(T, q, cells=None, tol=1e-6):
    """(c_Q, spread) of T(χ_{Q*}) - F_Q over the cells of q"""
    grid = _indicator_grid(q, cells)
    tf = apply(T, GridFunction(grid, np.ones(grid.shape), True))
    mask = np.zeros(grid.shape, dtype=bool)
    mask[grid.slices(q)] = True
    cell_ids = np.flatnonzero(mask)
    mids = grid.midpoints()[cell_ids]
    diff = tf.values.ravel()[cell_ids] - tail_integrals(T, q, mids, tol)
    c_q = float(np.mean(diff))
    return c_q, float(diff.max() - diff.min())


# ============================================================
# T(1) probe
# ============================================================

def smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t ** 3 * (t * (6.0 * t - 15.0) + 10.0)


def theta(r):
    """Radial cutoff profile: 1 on r <= 1, 0 on r >= 2, quintic in between"""
    return 1.0 - smoothstep(np.asarray(r, dtype=float) - 1.0)


def theta_slope(r):
    """d/dr θ(r) = -30 t^2 (1 - t)^2, t = r - 1 in [0, 1]"""
    t = np.clip(np.asarray(r, dtype=float) - 1.0, 0.0, 1.0)
    return -30.0 * t ** 2 * (1.0 - t) ** 2


@dataclass(frozen=True)
class ProbeConfig:
    radii: tuple = (10.0, 20.0, 40.0, 80.0)
    cells: int = 1024
    margin: float = 2.5             # probe box is [-margin·R, margin·R]^n
    dim: int = 1
    window: Optional[Cube] = None   # observation region; None = the whole probe box

    def grid_for(self, R):
        return Grid.centered(self.margin * R, self.cells, self.dim)

    def theta_R(self, grid, R):
        return GridFunction.sample(grid, lambda p: theta(np.linalg.norm(p, axis=1) / R), compact=True)


@dataclass
class ProbeResult:
    rows: list                      # (R, sup norm)
    verdict: str
    note: str = "T(1) is tested against mean-zero functions only: the verdict concerns boundedness modulo constants"

    @property
    def norms(self):
        return [s for _, s in self.rows]

    def to_dict(self):
        return {"rows": [{"R": r, "supNorm": s} for r, s in self.rows], "verdict": self.verdict, "note": self.note}


def probe_verdict(norms, variation=0.1):
    """'bounded' if nonincreasing after an interior maximum, or flat over the last three radii"""
    norms = list(norms)
    if not norms:
        return "bounded"
    top = int(np.argmax(norms))
    monotone = top < len(norms) - 1 and all(b <= a * (1 + 1e-12) for a, b in zip(norms[top:], norms[top + 1:]))
    last = norms[-3:]
    spread = (max(last) - min(last)) / max(last) if max(last) > 0 else 0.0
    return "bounded" if monotone or spread < variation else "unbounded"


def _probe_dim(T, probe):
    dim = T.kernel.dim if T.kernel is not None and T.kernel.dim is not None else probe.dim
    if dim != probe.dim:
        raise DimensionUnsupported(f"operator is {dim}-D, probe is {probe.dim}-D")
    return dim


def t1_probe(T, probe):
    _probe_dim(T, probe)
    if probe.margin <= 2.0:
        raise DomainTooSmall(f"probe margin {probe.margin} does not hold supp θ_R (radius 2R)")
    rows = []
    for R in probe.radii:
        grid = probe.grid_for(R)
        window = probe.window
        if window is not None and not grid.box.contains(window):
            raise DomainTooSmall(f"observation window does not fit the probe box at R={R}")
        tf = apply(T, probe.theta_R(grid, R))
        vals = tf.values if window is None else tf.values[grid.slices(window)]
        rows.append((float(R), float(np.max(np.abs(vals)))))
        logger.debug("[Probe] %s R=%g sup=%.6g", T.label, R, rows[-1][1])
    verdict = probe_verdict([s for _, s in rows])
    logger.info("[Probe] %s: %s", T.label, verdict)
    return ProbeResult(rows, verdict)


def t1_estimate(T, probe, window):
    """T(θ_R) - mean over the window, largest R; zero outside the window"""
    _probe_dim(T, probe)
    R = max(probe.radii)
    grid = probe.grid_for(R)
    if not grid.box.contains(window):
        raise DomainTooSmall("estimate window does not fit the probe box")
    tf = apply(T, probe.theta_R(grid, R))
    sl = grid.slices(window)
    out = np.zeros(grid.shape)
    block = tf.values[sl]
    out[sl] = block - math.fsum(block.ravel()) / block.size
    return GridFunction(grid, out, compact=True)


# ============================================================
# T = T̃ + bI
# ============================================================

def compose(t_tilde, b):
    """T̃ + bI; a diagonal already carried by T̃ is added to b"""
    if not isinstance(t_tilde, OperatorSpec):
        t_tilde = OperatorSpec(kernel=t_tilde)
    if b is None:
        return t_tilde
    diagonal = SumDiagonal(t_tilde.diagonal, b) if t_tilde.diagonal is not None else b
    return OperatorSpec(t_tilde.kernel, diagonal, f"sum:{t_tilde.label}+diag:{b.label}")


def decompose(T):
    if T.diagonal is None:
        raise NoDiagonalPart(f"operator '{T.label}' carries no diagonal part")
    kernel = T.kernel if T.kernel is not None else ZeroKernel()
    return OperatorSpec(kernel=kernel), T.diagonal

"""
Pointwise Sobolev-type estimates in the plane: the Riesz potential I_1, the
(1,1) Poincaré constant, the dyadic-sum comparison for I_1 and the two-sided
check |Tf| ≲ I_1(|∇f|), and the constants of the chain linking it to the
sparse bound.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.signal import fftconvolve

from .czo import ProbeConfig, apply, t1_probe, theta_slope
from .errors import DimensionUnsupported, ZeroGradient
from .field import GridFunction, gradient_norm
from .lattice import ShiftedLatticeSet
from .local_stats import average_abs, mean_oscillation, _summed_area
from .sparse_engine import assemble_global, domination_report

logger = logging.getLogger(__name__)

# ∫ over the unit square centred at 0 of |y|^{-1} dy
SINGULAR_CELL = 4.0 * math.asinh(1.0)
EXTRA_SCALES = 24


def _require_plane(grid, what):
    if grid.dim != 2:
        raise DimensionUnsupported(f"{what} is defined for n = 2 only (the Sobolev inequality needs n >= 2)")


def _antiderivative(x, y):
    """F(x, y) = x·asinh(y/|x|) + y·asinh(x/|y|), mixed antiderivative of 1/|(x, y)|"""
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(x != 0, x * np.arcsinh(y / np.abs(x)), 0.0)
        b = np.where(y != 0, y * np.arcsinh(x / np.abs(y)), 0.0)
    return a + b


@lru_cache(maxsize=8)
def _potential_weights(cells):
    """Integrals of |y|^{-1} over unit cells at integer offsets, [-(N-1), N-1]^2"""
    k = np.arange(-(cells - 1), cells, dtype=float)
    lo, hi = k - 0.5, k + 0.5
    x0, x1 = lo[:, None], hi[:, None]
    y0, y1 = lo[None, :], hi[None, :]
    w = _antiderivative(x1, y1) - _antiderivative(x0, y1) - _antiderivative(x1, y0) + _antiderivative(x0, y0)
    w[cells - 1, cells - 1] = SINGULAR_CELL
    return w


def riesz_potential(g):
    """I_1 g(x) = ∫ g(y)|x - y|^{-1} dy, exact cell integrals, FFT convolution"""
    _require_plane(g.grid, "the Riesz potential I_1")
    n = g.grid.cells
    full = fftconvolve(g.values, _potential_weights(n), mode="full")
    vals = g.grid.spacing * full[n - 1:2 * n - 1, n - 1:2 * n - 1]
    return GridFunction(g.grid, vals, compact=False)


# ============================================================
# Poincaré
# ============================================================

@dataclass
class PoincareReport:
    constants: list = field(default_factory=list)     # (cube, C_Q)
    skipped: list = field(default_factory=list)       # cubes with zero gradient
    grows: bool = False

    @property
    def max_constant(self):
        return max((c for _, c in self.constants), default=0.0)

    def to_dict(self):
        return {"maxConstant": self.max_constant, "evaluated": len(self.constants),
                "skipped": len(self.skipped), "grows": self.grows}


def poincare_constant(f, grad, q):
    slope = average_abs(grad, q)
    if slope <= 0.0:
        raise ZeroGradient(f"⟨|∇f|⟩ vanishes on {q.to_dict()}")
    return mean_oscillation(f, q) / (q.measure() ** (1.0 / q.dim) * slope)


def poincare_check(f, cubes, reference=None, growth=1.1):
    """C_Q = Ω(f;Q) / (|Q|^{1/n}·⟨|∇f|⟩_Q) over the cubes; zero-gradient cubes are listed"""
    grad = gradient_norm(f)
    report = PoincareReport()
    for q in cubes:
        try:
            report.constants.append((q, poincare_constant(f, grad, q)))
        except ZeroGradient:
            report.skipped.append(q)
    if reference is not None and reference.max_constant > 0:
        report.grows = report.max_constant > growth * reference.max_constant
    return report


# ============================================================
# Dyadic sums against I_1
# ============================================================

def dyadic_riesz_sum(g, lattice, x, lattices=None):
    """
    Σ over cubes Q of the given lattice containing cell x of
    |Q|^{-(1-1/n)}∫_Q g, on the cell-unit version of the lattice; the sub-cell
    scales are summed in closed form (g(x)·h).
    """
    _require_plane(g.grid, "the dyadic Riesz sum")
    lattices = lattices or ShiftedLatticeSet(2)
    a = g.values
    n = g.grid.cells
    h = g.grid.spacing
    sat = _summed_area(a)
    x = tuple(int(i) for i in x)
    total = [float(a[x]) * h]
    top = int(math.ceil(math.log2(n))) + EXTRA_SCALES
    for level in range(0, top + 1):
        length = 2 ** level
        lo, hi = [], []
        for axis, o in enumerate(lattices.grid_offsets(lattice, length, level)):
            start = o + ((x[axis] - o) // length) * length
            lo.append(min(max(start, 0), n))
            hi.append(min(max(start + length, 0), n))
        block = sat[hi[0], hi[1]] - sat[lo[0], hi[1]] - sat[hi[0], lo[1]] + sat[lo[0], lo[1]]
        # |Q|^{-1/2}∫_Q g = (L h)^{-1}·h^2·blocksum
        total.append(float(block) * h / length)
    return math.fsum(total)


def dyadic_riesz_bound(g, lattice, x, potential=None):
    """(lhs, rhs) = (dyadic sum at cell x, I_1 g(x))"""
    rhs_field = potential if potential is not None else riesz_potential(g)
    return dyadic_riesz_sum(g, lattice, x), float(rhs_field.values[tuple(int(i) for i in x)])


# ============================================================
# Sobolev domination
# ============================================================

@dataclass
class SobolevReport:
    label: str
    abs_tf: np.ndarray
    potential: np.ndarray
    ratios: np.ndarray
    best_constant: float
    violations: np.ndarray
    directions: dict = field(default_factory=dict)

    @property
    def violation_fraction(self):
        return len(self.violations) / self.abs_tf.size if self.abs_tf.size else 0.0

    def summary(self):
        return {
            "operator": self.label,
            "bestConstant": self.best_constant,
            "violationFraction": self.violation_fraction,
            "violations": len(self.violations),
            **self.directions,
        }


def sobolev_check(T, f, tolerance=1e-8):
    _require_plane(f.grid, "the Sobolev check")
    abs_tf = np.abs(apply(T, f).values).ravel()
    potential = riesz_potential(gradient_norm(f)).values.ravel()
    top = float(abs_tf.max()) if abs_tf.size else 0.0
    valid = potential > 0
    ratios = np.full(abs_tf.shape, np.nan)
    ratios[valid] = abs_tf[valid] / potential[valid]
    best = float(np.max(ratios[valid])) if valid.any() else 0.0
    violations = np.flatnonzero(~valid & (abs_tf > tolerance * top))
    logger.info("[Sobolev] %s: C=%.6g, violations %d", T.label, best, len(violations))
    return SobolevReport(T.label, abs_tf, potential, ratios, best, violations, {"sufficiency": "run"})


@dataclass
class ChainReport:
    """
    Constants of the route sparse bound -> Poincaré -> I_1, all measured on
    the same emitted family: |Tf| <= sparse·Σ Ω(f;Q)χ_Q,
    Ω(f;Q) <= poincare·|Q|^{1/n}⟨|∇f|⟩_Q and
    Σ |Q|^{1/n}⟨|∇f|⟩_Q χ_Q <= potential·I_1(|∇f|).
    """
    label: str
    sparse: float
    poincare: float
    potential: float
    cubes: int

    @property
    def product(self):
        return self.sparse * self.poincare * self.potential

    def to_dict(self):
        return {"operator": self.label, "sparseConstant": self.sparse, "poincareConstant": self.poincare,
                "potentialRatio": self.potential, "product": self.product, "cubes": self.cubes}


def chain_constants(T, f, engine):
    _require_plane(f.grid, "the Sobolev chain")
    S = assemble_global(f, T, engine)
    sparse = domination_report(T, f, S).best_constant
    grid = f.grid
    grad = gradient_norm(f)
    sums = np.zeros(grid.shape)
    poincare = 0.0
    for entry in S.entries:
        q = entry.cube
        term = q.measure() ** (1.0 / q.dim) * average_abs(grad, q)
        osc = mean_oscillation(f, q)
        if term > 0.0:
            poincare = max(poincare, osc / term)
        elif osc > 0.0:
            poincare = math.inf
        sums[grid.slices(q)] += term
    potential = riesz_potential(grad).values
    valid = potential > 0
    ratio = float(np.max(sums[valid] / potential[valid])) if valid.any() else 0.0
    report = ChainReport(T.label, sparse, poincare, ratio, len(S))
    logger.info("[Sobolev] %s chain: %.4g x %.4g x %.4g = %.4g over %d cubes",
                T.label, sparse, poincare, ratio, report.product, len(S))
    return report


@dataclass
class NecessityVerdict:
    label: str
    probe: object
    premise: list                 # (R, sup I_1(|∇θ_R|))
    premise_ok: bool
    verdict: str
    note: str = ""

    def to_dict(self):
        return {
            "operator": self.label,
            "probe": self.probe.to_dict(),
            "premise": [{"R": r, "supPotential": s} for r, s in self.premise],
            "premiseOk": self.premise_ok,
            "verdict": self.verdict,
            "note": self.note,
        }


def theta_gradient_norm(probe, grid, R):
    """|∇θ_R| sampled from the analytic profile"""
    return GridFunction.sample(grid, lambda p: np.abs(theta_slope(np.linalg.norm(p, axis=1) / R)) / R)


def necessity_probe(T, probe=None, variation=0.1):
    """
    θ_R probe of T plus the premise sup_x I_1(|∇θ_R|)(x) independent of R;
    'consistent' means both hold, i.e. the run agrees with T(1) ∈ L^∞.
    """
    probe = probe or ProbeConfig(dim=2)
    if probe.dim != 2:
        raise DimensionUnsupported("the necessity probe runs in the plane")
    result = t1_probe(T, probe)
    premise = []
    for R in probe.radii:
        grid = probe.grid_for(R)
        premise.append((float(R), riesz_potential(theta_gradient_norm(probe, grid, R)).sup_norm()))
    sups = [s for _, s in premise]
    premise_ok = (max(sups) - min(sups)) / max(sups) < variation if sups and max(sups) > 0 else False
    verdict = "consistent" if premise_ok and result.verdict == "bounded" else "inconsistent"
    note = "" if T.within_hypotheses else "control with an unbounded diagonal, outside the CZO class"
    logger.info("[Probe] necessity %s: %s", T.label, verdict)
    return NecessityVerdict(T.label, result, premise, premise_ok, verdict, note)

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .params import Configurable, FloatParam


@dataclass(frozen=True)
class DiniModulus:
    """
    Modulus of continuity ω with ∫_0^1 ω(t)/t dt < ∞.
    Power moduli ω(t) = scale·t^exponent have integral scale/exponent; a
    general `evaluator` is integrated numerically unless `integral` is given.
    """
    scale: float = 1.0
    exponent: float = 1.0
    evaluator: Optional[Callable] = None
    integral: Optional[float] = None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.evaluator is not None:
            return np.asarray(self.evaluator(t), dtype=float)
        return self.scale * t ** self.exponent

    @property
    def dini_integral(self):
        if self.integral is not None:
            return float(self.integral)
        if self.evaluator is None:
            return self.scale / self.exponent if self.exponent > 0 else math.inf
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            value, _ = integrate.quad(lambda t: float(self(t)) / t, 0.0, 1.0, limit=200)
        return value if math.isfinite(value) else math.inf

    @property
    def is_dini(self):
        return math.isfinite(self.dini_integral)

    def to_dict(self):
        return {"scale": self.scale, "exponent": self.exponent, "diniIntegral": self.dini_integral}


class KernelCategory:
    """Kernel structure"""
    CONVOLUTION = "convolution"   # K(x, y) = k(x - y)
    GENERAL = "general"


class QuadratureStage:
    """How cell integrals ∫_cell K(x, y) dy are computed"""
    EXACT = "exact"          # closed-form antiderivative
    MIDPOINT = "midpoint"    # midpoint rule, singular cell by cancellation


# ============================================================
# Kernels
# ============================================================

class KernelSpec(Configurable):
    """
    Calderón–Zygmund kernel K(x, y) on R^n \\ diagonal.

    Subclasses give `evaluate` (or `profile` for convolution kernels), a Dini
    modulus, a pointwise decay bound and, for EXACT kernels, `box_integral`.
    """
    label = "kernel"
    dim = 1
    category = KernelCategory.CONVOLUTION
    stage = QuadratureStage.MIDPOINT
    is_odd = True
    is_zero = False
    params = [FloatParam("lam", "Lipschitz constant Λ", value=1.0, min=0.0)]

    @property
    def is_convolution(self):
        return self.category == KernelCategory.CONVOLUTION

    @property
    def has_antiderivative(self):
        return self.stage == QuadratureStage.EXACT

    def modulus(self):
        return DiniModulus(self.lam, 1.0)

    def profile(self, z):
        raise NotImplementedError

    def evaluate(self, x, y):
        """K(x, y) for broadcastable point arrays with trailing axis n."""
        return self.profile(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))

    def box_integral(self, x, lower, upper):
        """
        ∫_{[lower, upper]} K(x_i, y) dy for targets x[M, n] and boxes
        lower/upper[C, n]; returns [M, C].
        """
        raise NotImplementedError(f"{type(self).__name__} has no antiderivative")

    def decay_bound(self, r):
        """sup |K(x, y)| over |x - y| >= r"""
        return 1.0 / r ** self.dim

    def describe(self):
        return {
            "label": self.label,
            "dim": self.dim,
            "category": self.category,
            "stage": self.stage,
            "modulus": self.modulus().to_dict(),
            "settings": self.settings(),
        }


class SumKernel(KernelSpec):
    """K_a + K_b, both on the same dimension"""
    params = []

    def __init__(self, first, second):
        super().__init__()
        if first.dim != second.dim:
            raise ValueError(f"cannot add kernels of dimension {first.dim} and {second.dim}")
        self.first, self.second = first, second
        self.dim = first.dim
        self.label = f"{first.label}+{second.label}"
        both_conv = first.is_convolution and second.is_convolution
        self.category = KernelCategory.CONVOLUTION if both_conv else KernelCategory.GENERAL
        both_exact = first.has_antiderivative and second.has_antiderivative
        self.stage = QuadratureStage.EXACT if both_exact else QuadratureStage.MIDPOINT
        self.is_odd = first.is_odd and second.is_odd

    def modulus(self):
        a, b = self.first.modulus(), self.second.modulus()
        return DiniModulus(evaluator=lambda t: a(t) + b(t), integral=a.dini_integral + b.dini_integral)

    def evaluate(self, x, y):
        return self.first.evaluate(x, y) + self.second.evaluate(x, y)

    def box_integral(self, x, lower, upper):
        return self.first.box_integral(x, lower, upper) + self.second.box_integral(x, lower, upper)

    def decay_bound(self, r):
        return self.first.decay_bound(r) + self.second.decay_bound(r)

    def settings(self):
        return {"first": self.first.settings(), "second": self.second.settings()}


# ============================================================
# Diagonals (multiplication operators)
# ============================================================

class Diagonal(Configurable):
    """Multiplication by a function b(x)"""
    label = "diag"
    is_bounded = True
    params = []

    def __call__(self, points):
        raise NotImplementedError

    def sup_bound(self):
        return math.inf


class SumDiagonal(Diagonal):
    def __init__(self, first, second):
        super().__init__()
        self.first, self.second = first, second
        self.label = f"{first.label}+{second.label}"
        self.is_bounded = first.is_bounded and second.is_bounded

    def __call__(self, points):
        return self.first(points) + self.second(points)

    def sup_bound(self):
        return self.first.sup_bound() + self.second.sup_bound()


# ============================================================
# Operators
# ============================================================

@dataclass(frozen=True)
class OperatorSpec:
    """T = (kernel part) + (multiplication by the diagonal), either part optional"""
    kernel: Optional[KernelSpec] = None
    diagonal: Optional[Diagonal] = None
    label: str = ""

    def __post_init__(self):
        if self.kernel is None and self.diagonal is None:
            raise ValueError("an operator needs a kernel or a diagonal part")
        if not self.label:
            parts = [p.label for p in (self.kernel, self.diagonal) if p is not None]
            object.__setattr__(self, "label", "+".join(parts))

    @property
    def dim(self):
        return self.kernel.dim if self.kernel is not None else None

    @property
    def within_hypotheses(self):
        """False for controls outside the bounded-diagonal CZO class"""
        return self.diagonal is None or self.diagonal.is_bounded

    def __add__(self, other):
        kernel = _add_parts(self.kernel, other.kernel, SumKernel)
        diagonal = _add_parts(self.diagonal, other.diagonal, SumDiagonal)
        return OperatorSpec(kernel, diagonal, f"sum:{self.label}+{other.label}")

    def describe(self):
        return {
            "label": self.label,
            "kernel": self.kernel.describe() if self.kernel else None,
            "diagonal": self.diagonal.label if self.diagonal else None,
            "withinHypotheses": self.within_hypotheses,
        }


def _add_parts(a, b, combine):
    if a is None:
        return b
    if b is None:
        return a
    return combine(a, b)

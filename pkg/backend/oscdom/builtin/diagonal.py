import math

import numpy as np

from oscdom.core import Diagonal
from oscdom.params import FloatParam


class ConstantDiagonal(Diagonal):
    """b(x) ≡ c"""
    display_name = "Constant"
    label = "const"

    params = [FloatParam("value", "Value", value=1.0)]

    def __init__(self, config=None):
        super().__init__(config)
        self.label = "one" if self.value == 1.0 else f"const:{self.value:g}"

    def __call__(self, points):
        return np.full(len(np.atleast_2d(points)), self.value)

    def sup_bound(self):
        return abs(self.value)


class LogDiagonal(Diagonal):
    """
    b(x) = ln(2 + |x|). Unbounded, so T = T̃ + b is outside the bounded
    diagonal class; used as the necessity control.
    """
    display_name = "Logarithmic (control)"
    label = "log"
    is_bounded = False

    def __call__(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.log(2.0 + np.sqrt(np.sum(points ** 2, axis=1)))

    def sup_bound(self):
        return math.inf


class GridDiagonal(Diagonal):
    """b given as a grid function (cell-constant, zero outside its box)"""
    display_name = "Sampled"
    label = "grid"

    def __init__(self, function):
        super().__init__()
        self.function = function

    def __call__(self, points):
        return self.function.sample_at(points)

    def sup_bound(self):
        return self.function.sup_norm()

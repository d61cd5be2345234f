import numpy as np

from oscdom.core import KernelSpec, QuadratureStage
from oscdom.params import FloatParam

# |x - y| is clamped away from zero at this fraction of the cell size
SINGULAR_CLAMP = 1e-12


class HilbertKernel(KernelSpec):
    """Hilbert transform kernel 1/(x - y) on R"""
    display_name = "Hilbert"
    description = "K(x, y) = 1/(x - y); exact cell integrals ln|x - a| - ln|x - b|"
    label = "hilbert"
    dim = 1
    stage = QuadratureStage.EXACT

    params = [
        FloatParam("lam", "Lipschitz constant Λ", value=2.0, min=0.0,
                   info="|K(x,y) - K(x',y)| <= 2|x - x'|/|x - y|^2 for |x - x'| <= |x - y|/2"),
    ]

    def profile(self, z):
        return 1.0 / z[..., 0]

    def box_integral(self, x, lower, upper):
        x = np.asarray(x, dtype=float)[:, None, 0]
        a = np.asarray(lower, dtype=float)[None, :, 0]
        b = np.asarray(upper, dtype=float)[None, :, 0]
        floor = SINGULAR_CLAMP * (b - a)
        return np.log(np.maximum(np.abs(x - a), floor)) - np.log(np.maximum(np.abs(x - b), floor))

    def decay_bound(self, r):
        return 1.0 / r

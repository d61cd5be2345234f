import numpy as np

from oscdom.builtin.corpus import CorpusGenerator, plateau_profile
from oscdom.core import KernelSpec, QuadratureStage
from oscdom.params import FloatParam


class TemperedHilbertKernel(KernelSpec):
    """
    Tempered Hilbert kernel example.
    K(x, y) = e^{-|x-y|/L}/(x - y): odd, so the midpoint rule drops the
    singular cell; no antiderivative is declared.
    """
    display_name = "Tempered Hilbert"
    description = "e^{-|z|/L}/z, midpoint-rule plugin kernel"
    label = "tempered"
    dim = 1
    stage = QuadratureStage.MIDPOINT

    params = [
        FloatParam("lam", "Lipschitz constant Λ", value=4.0, min=0.0),
        FloatParam("length", "Tempering length L", value=1.0, min=1e-3),
    ]

    def profile(self, z):
        z = z[..., 0]
        return np.exp(-np.abs(z) / self.length) / z

    def decay_bound(self, r):
        return np.exp(-r / self.length) / r


class GaussianGenerator(CorpusGenerator):
    """Gaussian exp(-|x|²/2σ²) under the plateau cutoff"""
    display_name = "Gaussian"
    smooth = True

    params = [FloatParam("sigma", "Width σ", value=0.3, min=0.01, max=1.0)]

    def evaluate(self, points, rng):
        r2 = np.sum(points ** 2, axis=1)
        return np.exp(-r2 / (2.0 * self.sigma ** 2)) * np.prod(plateau_profile(points), axis=1)

"""Control kernels: the zero kernel and a deliberately non-smooth one."""
import numpy as np

from oscdom.core import DiniModulus, KernelCategory, KernelSpec, QuadratureStage
from oscdom.params import FloatParam, IntParam

from .hilbert import SINGULAR_CLAMP


class ZeroKernel(KernelSpec):
    """K ≡ 0; the kernel part of a pure multiplication operator"""
    display_name = "Zero kernel"
    label = "zero"
    stage = QuadratureStage.EXACT
    is_zero = True

    params = [IntParam("dim", "Dimension (empty: any)", value=None, min=1, max=2)]

    def modulus(self):
        return DiniModulus(0.0, 1.0)

    def evaluate(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return np.zeros(x.shape[:-1])

    def box_integral(self, x, lower, upper):
        return np.zeros((len(x), len(lower)))

    def decay_bound(self, r):
        return 0.0


class SignFlipKernel(KernelSpec):
    """
    sign(x)/(x - y): equal to the Hilbert kernel on one half-line and to its
    negative on the other, so it jumps across x = 0 for every y. The declared
    modulus is the Hilbert one, which the kernel audit must reject.
    """
    display_name = "Broken control"
    description = "sign(x)/(x - y), violates every Dini modulus near x = 0"
    label = "control:signflip"
    dim = 1
    category = KernelCategory.GENERAL
    stage = QuadratureStage.EXACT
    is_odd = False

    params = [FloatParam("lam", "Claimed Lipschitz constant", value=2.0, min=0.0)]

    def evaluate(self, x, y):
        x = np.asarray(x, dtype=float)[..., 0]
        y = np.asarray(y, dtype=float)[..., 0]
        return np.sign(x) / (x - y)

    def box_integral(self, x, lower, upper):
        x = np.asarray(x, dtype=float)[:, None, 0]
        a = np.asarray(lower, dtype=float)[None, :, 0]
        b = np.asarray(upper, dtype=float)[None, :, 0]
        floor = SINGULAR_CLAMP * (b - a)
        logs = np.log(np.maximum(np.abs(x - a), floor)) - np.log(np.maximum(np.abs(x - b), floor))
        return np.sign(x) * logs

    def decay_bound(self, r):
        return 1.0 / r

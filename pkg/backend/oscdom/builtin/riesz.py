import numpy as np

from oscdom.core import KernelSpec, QuadratureStage
from oscdom.params import FloatParam

SINGULAR_CLAMP = 1e-12


def _corner(u, v, floor):
    """G(u, v) = -asinh(v/|u|), a mixed antiderivative of u/|(u, v)|^3"""
    return -np.arcsinh(v / np.maximum(np.abs(u), floor))


class RieszKernel(KernelSpec):
    """
    Riesz kernel (x_j - y_j)/|x - y|^3 on R^2 (normalizing constant dropped).
    Cell integrals come from the corner sum of G over the shifted cell.
    """
    display_name = "Riesz"
    label = "riesz"
    dim = 2
    stage = QuadratureStage.EXACT
    axis = 0

    params = [
        FloatParam("lam", "Lipschitz constant Λ", value=16.0, min=0.0,
                   info="mean-value bound from |∇K(z)| <= 2/|z|^3"),
    ]

    def profile(self, z):
        r = np.sqrt(np.sum(z ** 2, axis=-1))
        return z[..., self.axis] / r ** 3

    def box_integral(self, x, lower, upper):
        x = np.asarray(x, dtype=float)[:, None, :]
        lo = np.asarray(lower, dtype=float)[None, :, :]
        hi = np.asarray(upper, dtype=float)[None, :, :]
        # u along the kernel's axis, v along the other one
        j, k = self.axis, 1 - self.axis
        u1, u2 = x[..., j] - hi[..., j], x[..., j] - lo[..., j]
        v1, v2 = x[..., k] - hi[..., k], x[..., k] - lo[..., k]
        floor = SINGULAR_CLAMP * (hi[..., j] - lo[..., j])
        return (_corner(u2, v2, floor) - _corner(u1, v2, floor)
                - _corner(u2, v1, floor) + _corner(u1, v1, floor))

    def decay_bound(self, r):
        return 1.0 / r ** 2


class Riesz1Kernel(RieszKernel):
    display_name = "Riesz R1"
    description = "K(x, y) = (x1 - y1)/|x - y|^3"
    label = "riesz1"
    axis = 0


class Riesz2Kernel(RieszKernel):
    display_name = "Riesz R2"
    description = "K(x, y) = (x2 - y2)/|x - y|^3"
    label = "riesz2"
    axis = 1

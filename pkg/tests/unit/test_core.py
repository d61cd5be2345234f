import math

import numpy as np
import pytest

from oscdom.builtin.diagonal import ConstantDiagonal, LogDiagonal
from oscdom.builtin.hilbert import HilbertKernel
from oscdom.builtin.riesz import RieszKernel
from oscdom.core import DiniModulus, KernelCategory, OperatorSpec, QuadratureStage, SumDiagonal, SumKernel


def test_power_modulus():
    omega = DiniModulus(2.0, 1.0)
    assert omega(0.5) == 1.0
    assert omega.dini_integral == 2.0
    assert omega.is_dini
    assert DiniModulus(1.0, 0.5).dini_integral == 2.0
    assert not DiniModulus(1.0, 0.0).is_dini


def test_general_modulus_is_integrated():
    # ∫_0^1 dt / (t (1 + ln 1/t)^2) = 1
    omega = DiniModulus(evaluator=lambda t: 1.0 / (1.0 + np.log(1.0 / t)) ** 2)
    assert omega.dini_integral == pytest.approx(1.0, rel=1e-6)
    assert DiniModulus(evaluator=lambda t: t, integral=3.0).dini_integral == 3.0


def test_sum_kernel():
    a, b = HilbertKernel(), HilbertKernel({"lam": 1.0})
    k = SumKernel(a, b)
    assert k.label == "hilbert+hilbert"
    assert k.category == KernelCategory.CONVOLUTION
    assert k.stage == QuadratureStage.EXACT
    assert k.modulus().dini_integral == 3.0
    assert k.evaluate(np.array([[1.0]]), np.array([[0.5]]))[0] == pytest.approx(4.0)
    assert k.decay_bound(2.0) == 1.0
    with pytest.raises(ValueError):
        SumKernel(HilbertKernel(), RieszKernel())


def test_operator_parts():
    with pytest.raises(ValueError):
        OperatorSpec()
    T = OperatorSpec(kernel=HilbertKernel())
    assert T.label == "hilbert"
    assert T.dim == 1
    assert T.within_hypotheses
    B = OperatorSpec(diagonal=ConstantDiagonal({"value": 0.5}))
    assert B.dim is None

    S = T + B
    assert S.label == "sum:hilbert+const:0.5"
    assert S.kernel is T.kernel
    assert S.diagonal.label == "const:0.5"
    assert (S + B).diagonal.sup_bound() == 1.0
    assert isinstance((S + B).diagonal, SumDiagonal)

    U = T + OperatorSpec(diagonal=LogDiagonal())
    assert not U.within_hypotheses
    assert U.describe()["withinHypotheses"] is False
    assert math.isinf(U.diagonal.sup_bound())

import math

import numpy as np
import pytest

from oscdom.builtin.diagonal import ConstantDiagonal, LogDiagonal
from oscdom.config import EngineConfig
from oscdom.core import OperatorSpec
from oscdom.czo import ProbeConfig, compose
from oscdom.errors import DimensionUnsupported, ZeroGradient
from oscdom.field import Grid, GridFunction, gradient_norm
from oscdom.lattice import Cube
from oscdom.sobolev import (
    PoincareReport,
    chain_constants,
    dyadic_riesz_bound,
    necessity_probe,
    poincare_check,
    poincare_constant,
    riesz_potential,
    sobolev_check,
)


def _corner(x, y):
    return x * math.asinh(y / abs(x)) + y * math.asinh(x / abs(y))


def _box_potential(x, lower, upper):
    """∫ over [lower, upper]^2 of |x - y|^-1 dy"""
    u0, u1 = lower - x[0], upper - x[0]
    v0, v1 = lower - x[1], upper - x[1]
    return _corner(u1, v1) - _corner(u0, v1) - _corner(u1, v0) + _corner(u0, v0)


@pytest.fixture
def plane_bump(plane_grid):
    return GridFunction.sample(
        plane_grid, lambda p: np.clip(1.0 - np.sum(p ** 2, axis=1), 0.0, None) ** 2
    )


def test_potential_of_a_constant_is_exact(plane_grid):
    pot = riesz_potential(GridFunction(plane_grid, np.ones(plane_grid.shape)))
    for i, j in ((15, 15), (0, 0), (3, 28)):
        x = plane_grid.box.lower + (np.array([i, j]) + 0.5) * plane_grid.spacing
        assert pot.values[i, j] == pytest.approx(_box_potential(x, -2.0, 2.0), rel=1e-9)


def test_plane_only(line_grid, hilbert):
    f = GridFunction.zeros(line_grid)
    with pytest.raises(DimensionUnsupported):
        riesz_potential(f)
    with pytest.raises(DimensionUnsupported):
        sobolev_check(hilbert, f)
    with pytest.raises(DimensionUnsupported):
        necessity_probe(hilbert, ProbeConfig(dim=1))


def test_sobolev_check_of_riesz(plane_bump, registry):
    report = sobolev_check(registry.resolve("riesz1"), plane_bump)
    assert report.violation_fraction == 0.0
    assert 0.0 < report.best_constant < math.inf
    assert report.summary()["operator"] == "riesz1"


def test_identity_is_dominated_by_the_potential(plane_bump):
    # |f| <= (2π)^-1 I_1(|∇f|) for compactly supported f
    report = sobolev_check(OperatorSpec(diagonal=ConstantDiagonal()), plane_bump)
    assert report.best_constant < 0.25
    assert len(report.violations) == 0


def test_poincare_constant_of_a_linear_function(plane_grid):
    f = GridFunction.sample(plane_grid, lambda p: 2.0 * p[:, 0], compact=False)
    cubes = [Cube.from_lower((-1.0, -1.0), 1.0), Cube.from_lower((0.0, 0.5), 0.5)]
    report = poincare_check(f, cubes)
    assert [c for _, c in report.constants] == pytest.approx([0.25, 0.25])
    assert report.max_constant == pytest.approx(0.25)
    assert not report.skipped

    baseline = PoincareReport(constants=[(cubes[0], 0.1)])
    assert poincare_check(f, cubes, reference=baseline).grows
    assert not poincare_check(f, cubes, reference=report).grows
    assert report.to_dict()["evaluated"] == 2


def test_zero_gradient_cubes_are_skipped(plane_grid):
    f = GridFunction(plane_grid, np.ones(plane_grid.shape), compact=False)
    q = Cube((0.0, 0.0), 1.0)
    report = poincare_check(f, [q])
    assert report.skipped == [q]
    assert report.max_constant == 0.0
    with pytest.raises(ZeroGradient):
        poincare_constant(f, gradient_norm(f), q)


def test_dyadic_sums_are_controlled_by_the_potential(plane_bump):
    g = gradient_norm(plane_bump)
    potential = riesz_potential(g)
    for lattice in (0, 4, 8):
        for x in ((16, 16), (10, 20), (2, 5)):
            lhs, rhs = dyadic_riesz_bound(g, lattice, x, potential)
            assert lhs > 0.0
            assert lhs <= 10.0 * rhs


def test_necessity_probe_on_a_riesz_transform(registry):
    probe = ProbeConfig(radii=(10.0, 20.0, 40.0), cells=32, dim=2)
    verdict = necessity_probe(registry.resolve("riesz1"), probe)
    assert verdict.premise_ok
    assert verdict.verdict == "consistent"
    assert verdict.note == ""
    data = verdict.to_dict()
    assert data["premiseOk"]
    assert [row["R"] for row in data["premise"]] == [10.0, 20.0, 40.0]


def test_necessity_probe_marks_the_unbounded_control(registry):
    probe = ProbeConfig(radii=(10.0, 20.0, 40.0), cells=32, dim=2)
    T = compose(registry.resolve("riesz1"), LogDiagonal())
    verdict = necessity_probe(T, probe)
    assert verdict.note
    norms = verdict.probe.norms
    assert norms[0] < norms[1] < norms[2]


def test_potential_of_the_unit_disk_at_its_center():
    grid = Grid.centered(1.5, 256, 2)
    disk = GridFunction.sample(grid, lambda p: (np.sum(p ** 2, axis=1) < 1.0).astype(float))
    # cell (128, 128) has its midpoint h/2 off the center along each axis
    assert riesz_potential(disk).values[128, 128] == pytest.approx(2.0 * math.pi, abs=1e-2)


def test_chain_constants_bound_the_sobolev_constant(plane_bump, registry, line_grid, hilbert):
    T = registry.resolve("riesz1")
    engine = EngineConfig.for_dim(2, max_depth=2, rings=1, ring_cells=16, tail_tolerance=10.0)
    chain = chain_constants(T, plane_bump, engine)
    best = sobolev_check(T, plane_bump).best_constant

    assert chain.cubes > 0
    for constant in (chain.sparse, chain.poincare, chain.potential):
        assert math.isfinite(constant)
        assert constant > 0.0
    assert 0.0 < best <= chain.product * (1 + 1e-9)
    assert chain.to_dict()["product"] == chain.product

    with pytest.raises(DimensionUnsupported):
        chain_constants(hilbert, GridFunction.zeros(line_grid), EngineConfig.for_dim(1))

import io

import numpy as np
import pytest

from oscdom.errors import CubeBelowResolution, CubeOutsideDomain
from oscdom.field import (
    Grid,
    GridFunction,
    average,
    from_bytes,
    gradient,
    integrate,
    read_csv,
    restrict,
    to_bytes,
    to_csv_text,
)
from oscdom.lattice import Cube, children


def test_grid_geometry(line_grid, plane_grid):
    assert line_grid.spacing == 1 / 64
    assert line_grid.shape == (256,)
    assert plane_grid.total_cells == 1024
    assert plane_grid.cell_measure == 1 / 64
    mids = plane_grid.midpoints()
    assert mids.shape == (1024, 2)
    # C order: second axis varies fastest
    np.testing.assert_allclose(mids[1] - mids[0], [0.0, 0.125])


def test_grid_rejects_bad_cell_count():
    with pytest.raises(ValueError):
        Grid.centered(1.0, 0)
    with pytest.raises(ValueError):
        Grid.centered(1.0, 2.5)


def test_cube_snapping(line_grid):
    assert line_grid.index_range(Cube.from_lower((0.0,), 0.5)) == [(128, 160)]
    np.testing.assert_array_equal(line_grid.cells_in(Cube.from_lower((0.0,), 0.5)), np.arange(128, 160))
    with pytest.raises(CubeBelowResolution):
        line_grid.cells_in(Cube((0.0,), 0.001))
    # a cube leaving the box keeps only its in-box cells
    assert len(line_grid.cells_in(Cube((2.0,), 2.0))) == 64


def test_integrate_and_average_with_compact_exterior(line_grid):
    one = GridFunction(line_grid, np.ones(line_grid.shape), compact=True)
    assert integrate(one, Cube((0.5,), 1.0)) == 1.0
    # half of [1, 3] lies outside the box, where the function vanishes
    assert average(one, Cube((2.0,), 2.0)) == 0.5


def test_non_compact_function_cannot_leave_the_box(line_grid):
    f = GridFunction(line_grid, np.ones(line_grid.shape), compact=False)
    with pytest.raises(CubeOutsideDomain):
        average(f, Cube((2.0,), 2.0))
    with pytest.raises(CubeOutsideDomain):
        f.sample_at([[3.0]])


def test_sample_at_upper_face(line_grid):
    f = GridFunction(line_grid, np.arange(256.0), compact=True)
    np.testing.assert_array_equal(f.sample_at([[2.0], [-2.0], [5.0]]), [255.0, 0.0, 0.0])


def test_values_are_frozen_and_finite(line_grid):
    f = GridFunction.zeros(line_grid)
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(ValueError):
        GridFunction(line_grid, np.full(line_grid.shape, np.nan))


def test_arithmetic_tracks_compactness(line_grid):
    f = GridFunction(line_grid, np.ones(line_grid.shape), compact=True)
    assert (f + f).compact
    assert not (f + 1.0).compact
    assert (2 * f).values[0] == 2.0
    assert (-f).sup_norm() == 1.0
    assert f.l1_norm() == 4.0
    with pytest.raises(ValueError):
        f + GridFunction.zeros(Grid.centered(1.0, 256))


def test_enlarge_and_embed(line_grid):
    big = line_grid.enlarge(Cube((2.0,), 2.0))
    assert big.cells == 320
    assert big.spacing == line_grid.spacing
    assert line_grid.offset_in(big) == (0,)
    assert line_grid.enlarge(Cube((0.0,), 1.0)) is line_grid

    small = Grid.centered(1.0, 128)
    f = GridFunction(small, np.ones(small.shape), compact=True)
    out = f.embed(line_grid)
    assert out.values[:64].sum() == 0.0
    assert out.values[64:192].sum() == 128.0
    with pytest.raises(ValueError):
        Grid.centered(1.0, 100).offset_in(line_grid)


def test_restrict(line_grid, dyadic_function):
    q = Cube.from_lower((0.0,), 1.0)
    r = restrict(dyadic_function, q)
    np.testing.assert_array_equal(r.values[128:192], dyadic_function.values[128:192])
    assert not r.values[:128].any()
    assert not r.values[192:].any()

    # a cube narrower than a cell snaps to nothing
    with pytest.raises(CubeBelowResolution):
        restrict(dyadic_function, Cube((0.3,), 0.25 * line_grid.spacing))
    assert not restrict(dyadic_function, Cube((10.0,), 1.0)).values.any()


def test_gradient_is_exact_on_linear_data(plane_grid):
    f = GridFunction.sample(plane_grid, lambda p: 3.0 * p[:, 0] - p[:, 1], compact=False)
    gx, gy = gradient(f)
    np.testing.assert_allclose(gx.values, 3.0)
    np.testing.assert_allclose(gy.values, -1.0)
    with pytest.raises(CubeBelowResolution):
        gradient(GridFunction.zeros(Grid.centered(1.0, 2)))


def test_binary_and_csv_serialization(plane_grid):
    f = GridFunction.sample(plane_grid, lambda p: np.sin(p[:, 0]) * p[:, 1], compact=False)
    g = from_bytes(to_bytes(f))
    assert g.grid == f.grid
    assert not g.compact
    np.testing.assert_array_equal(g.values, f.values)

    h = read_csv(io.StringIO(to_csv_text(f)), plane_grid, compact=False)
    np.testing.assert_array_equal(h.values, f.values)

    with pytest.raises(ValueError):
        from_bytes(b"XXXX" + to_bytes(f)[4:])
    truncated = "\n".join(to_csv_text(f).splitlines()[:10]) + "\n"
    with pytest.raises(ValueError):
        read_csv(io.StringIO(truncated), plane_grid)


def test_gradient_is_second_order_inside():
    errors = []
    for cells in (64, 128):
        grid = Grid.centered(2.0, cells, 1)
        f = GridFunction.sample(grid, lambda p: np.sin(2.0 * p[:, 0]), compact=False)
        (gx,) = gradient(f)
        x = grid.axis_midpoints()
        inside = np.abs(x) < 1.5
        errors.append(np.max(np.abs(gx.values - 2.0 * np.cos(2.0 * x))[inside]))
    assert errors[0] / errors[1] >= 3.0


def test_integrate_is_additive_over_bisections(dyadic_function, plane_grid):
    for center, side in ((0.0, 2.0), (0.5, 1.0), (-1.0, 0.25)):
        q = Cube((center,), side)
        halves = children(q)
        assert len(halves) == 2
        whole = integrate(dyadic_function, q)
        assert whole == pytest.approx(sum(integrate(dyadic_function, h) for h in halves), abs=1e-12)

    rng = np.random.default_rng(5)
    g = GridFunction(plane_grid, rng.integers(-8, 9, size=plane_grid.shape) / 4.0)
    q = Cube((0.5, -0.5), 2.0)
    assert integrate(g, q) == pytest.approx(sum(integrate(g, c) for c in children(q)), abs=1e-12)

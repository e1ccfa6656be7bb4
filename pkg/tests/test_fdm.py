"""Conservative-scheme Picard solver against exact and series references."""

import numpy as np
import pytest

from minsurf.boundary import lookup_builtin, parse_expression
from minsurf.errors import ConfigurationError
from minsurf.fdm import Grid2D, compare_model_to_grid, solve_fdm
from minsurf.models import scherk_solution
from minsurf.sampling import BoxDomain


class ExprG:
    """Expression behind the boundary-evaluation duck type."""

    def __init__(self, text):
        self.e = parse_expression(text)

    def evaluate(self, X):
        return self.e.evaluate(np.asarray(X))


def test_input_validation():
    g = ExprG("0")
    with pytest.raises(ConfigurationError):
        solve_fdm(g, BoxDomain.unit(3), 17)
    with pytest.raises(ConfigurationError):
        solve_fdm(g, BoxDomain.unit(2), 8)  # n >= 9
    with pytest.raises(ConfigurationError):
        solve_fdm(g, BoxDomain.unit(2), 17, tol=0.0)
    with pytest.raises(ConfigurationError):
        solve_fdm(g, BoxDomain.unit(2), 17, damping=0.0)
    with pytest.raises(ConfigurationError):
        solve_fdm(g, BoxDomain.unit(2), 17, damping=1.5)
    with pytest.raises(ConfigurationError):
        solve_fdm(g, BoxDomain((0.0, 0.0), (1.0, 2.0)), 17)  # square cells only


def test_affine_data_reproduced_exactly():
    # planes are fixed points of the discrete operator at any mesh
    grid = solve_fdm(ExprG("x1"), BoxDomain.unit(2), 17, tol=1e-13)
    assert grid.converged
    x1 = grid.interior_points()[:, 0]
    assert np.max(np.abs(grid.interior_values.ravel() - x1)) < 1e-11
    tilted = solve_fdm(ExprG("2*x1 - 3*x2 + 0.5"), BoxDomain.unit(2), 17, tol=1e-13)
    pts = tilted.interior_points()
    expect = 2 * pts[:, 0] - 3 * pts[:, 1] + 0.5
    assert np.max(np.abs(tilted.interior_values.ravel() - expect)) < 1e-10


def test_constant_data_converges_immediately():
    grid = solve_fdm(ExprG("5"), BoxDomain.unit(2), 17)
    assert grid.converged
    assert grid.iterations == 1  # boundary-ring mean initialization is exact
    assert np.max(np.abs(grid.values - 5.0)) < 1e-10


def test_maximum_principle():
    grid = solve_fdm(lookup_builtin("radial_sine_2d"), BoxDomain.unit(2), 33)
    assert grid.converged
    assert grid.values.min() > -1 - 1e-8
    assert grid.values.max() < 1 + 1e-8


def test_scherk_accuracy():
    dom = BoxDomain.cube(-1.3, 1.3, 2)
    grid = solve_fdm(lookup_builtin("scherk", domain=dom), dom, 33)
    assert grid.converged
    comp = compare_model_to_grid(scherk_solution(), grid)
    assert comp.max_abs < 5e-3
    assert comp.rms <= comp.max_abs
    assert comp.mean_abs <= comp.rms + 1e-15


def test_source_term_sign_poisson_limit():
    # small f makes the equation the Poisson problem -lap u = -f, whose
    # center value on the unit square has the classical double-series form
    f0 = 0.01
    grid = solve_fdm(ExprG("0"), BoxDomain.unit(2), 65, f=f0)
    series = 0.0
    for m in range(1, 400, 2):
        for n in range(1, 400, 2):
            series += (16 / np.pi ** 4) * np.sin(m * np.pi / 2) \
                * np.sin(n * np.pi / 2) / (m * n * (m ** 2 + n ** 2))
    center = f0 * series
    assert abs(grid.values[32, 32] - center) < 0.02 * abs(center)


def test_nonconvergence_is_reported():
    grid = solve_fdm(lookup_builtin("radial_sine_2d"), BoxDomain.unit(2), 33,
                     max_iter=1)
    assert not grid.converged
    assert grid.iterations == 1
    assert grid.final_update > 1e-8


def test_grid_geometry():
    dom = BoxDomain.cube(-1.0, 1.0, 2)
    grid = solve_fdm(ExprG("0"), dom, 9)
    assert grid.values.shape == (9, 9)
    nodes = grid.axis_nodes(0)
    assert np.allclose(nodes, np.linspace(-1, 1, 9))
    pts = grid.interior_points()
    assert pts.shape == (49, 2)
    # row-major agreement between point ordering and the value block
    assert np.array_equal(grid.interior_values.ravel(),
                          grid.values[1:-1, 1:-1].ravel())
    # values[i, j] sits at (x1_i, x2_j)
    assert pts[0, 0] == nodes[1] and pts[0, 1] == nodes[1]
    assert pts[-1, 0] == nodes[-2] and pts[-1, 1] == nodes[-2]


def test_compare_model_to_grid_on_exact_solution():
    dom = BoxDomain.cube(-0.8, 0.8, 2)
    grid = solve_fdm(lookup_builtin("scherk", domain=dom), dom, 17)
    comp = compare_model_to_grid(scherk_solution(), grid)
    assert comp.max_abs < 5e-4  # gentle slopes, coarse mesh still close

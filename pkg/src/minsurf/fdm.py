"""Finite-difference oracle for the 2-D problem.

Independent of the network path on purpose: a conservative 5-point scheme
for div(c grad u) = -f with c = 1/sqrt(1 + |grad u|^2) frozen at each
Picard step and evaluated at cell-face midpoints. Used to cross-check
trained models where no closed form exists.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import spsolve

from .errors import ConfigurationError
from .sampling import BoxDomain

__all__ = ["Grid2D", "GridComparison", "solve_fdm", "compare_model_to_grid"]


@dataclass
class Grid2D:
    """n x n nodal values; index [i, j] is (x1_i, x2_j), boundary holds g."""

    n: int
    domain: BoxDomain
    values: np.ndarray
    converged: bool
    iterations: int
    final_update: float

    def axis_nodes(self, axis: int) -> np.ndarray:
        return np.linspace(self.domain.lower[axis], self.domain.upper[axis], self.n)

    def interior_points(self) -> np.ndarray:
        """[(n-2)^2, 2] interior nodes, row-major to match values[1:-1, 1:-1]."""
        x1 = self.axis_nodes(0)[1:-1]
        x2 = self.axis_nodes(1)[1:-1]
        a, b = np.meshgrid(x1, x2, indexing="ij")
        return np.column_stack([a.ravel(), b.ravel()])

    @property
    def interior_values(self) -> np.ndarray:
        return self.values[1:-1, 1:-1]


@dataclass(frozen=True)
class GridComparison:
    max_abs: float
    mean_abs: float
    rms: float


def _face_coefficients(U: np.ndarray, h: float):
    """c = 1/sqrt(1+|grad u|^2) at vertical and horizontal face midpoints.

    The face-normal derivative is the exact two-point difference; the
    tangential one averages the central differences of the two nodes the
    face joins.
    """
    # vertical faces between (i, j) and (i+1, j), tangential rows j=1..n-2
    ux = (U[1:, 1:-1] - U[:-1, 1:-1]) / h
    uy = (U[:-1, 2:] - U[:-1, :-2] + U[1:, 2:] - U[1:, :-2]) / (4 * h)
    cx = 1.0 / np.sqrt(1.0 + ux * ux + uy * uy)
    # horizontal faces between (i, j) and (i, j+1), tangential rows i=1..n-2
    uy2 = (U[1:-1, 1:] - U[1:-1, :-1]) / h
    ux2 = (U[2:, :-1] - U[:-2, :-1] + U[2:, 1:] - U[:-2, 1:]) / (4 * h)
    cy = 1.0 / np.sqrt(1.0 + ux2 * ux2 + uy2 * uy2)
    return cx, cy


def _picard_matrix(cx: np.ndarray, cy: np.ndarray, boundary: np.ndarray,
                   f_value: float, h: float, n: int):
    """Assemble A u = b over the (n-2)^2 interior nodes for frozen coefficients."""
    m = n - 2
    idx = np.arange(m * m).reshape(m, m)
    # faces named from each interior node (i, j), 1-based grid indices
    ce = cx[1:, :]   # toward i+1
    cw = cx[:-1, :]  # toward i-1
    cn = cy[:, 1:]   # toward j+1
    cs = cy[:, :-1]  # toward j-1

    rows = [idx.ravel()]
    cols = [idx.ravel()]
    data = [(-(ce + cw + cn + cs)).ravel()]
    b = np.full((m, m), -f_value * h * h)

    # east neighbors
    rows.append(idx[:-1, :].ravel()); cols.append(idx[1:, :].ravel()); data.append(ce[:-1, :].ravel())
    b[-1, :] -= ce[-1, :] * boundary[-1, 1:-1]
    # west
    rows.append(idx[1:, :].ravel()); cols.append(idx[:-1, :].ravel()); data.append(cw[1:, :].ravel())
    b[0, :] -= cw[0, :] * boundary[0, 1:-1]
    # north
    rows.append(idx[:, :-1].ravel()); cols.append(idx[:, 1:].ravel()); data.append(cn[:, :-1].ravel())
    b[:, -1] -= cn[:, -1] * boundary[1:-1, -1]
    # south
    rows.append(idx[:, 1:].ravel()); cols.append(idx[:, :-1].ravel()); data.append(cs[:, 1:].ravel())
    b[:, 0] -= cs[:, 0] * boundary[1:-1, 0]

    A = coo_matrix((np.concatenate(data),
                    (np.concatenate(rows), np.concatenate(cols))),
                   shape=(m * m, m * m)).tocsr()
    return A, b.ravel()


def solve_fdm(g, domain: BoxDomain, n: int, f: float = 0.0,
              tol: float = 1e-8, max_iter: int = 10_000,
              damping: float = 0.5) -> Grid2D:
    """Damped Picard iteration on the nonlinear 5-point scheme.

    ``g`` is anything with an ``evaluate(points) -> values`` method. A run
    that exhausts max_iter comes back with ``converged=False`` rather than
    raising; the caller decides whether that grid is usable.
    """
    if domain.dim != 2:
        raise ConfigurationError("the grid oracle is 2-D only")
    if n < 9:
        raise ConfigurationError(f"grid needs at least 9 nodes per side, got {n}")
    if not tol > 0:
        raise ConfigurationError("tolerance must be positive")
    if not 0 < damping <= 1:
        raise ConfigurationError("damping must lie in (0, 1]")
    if max_iter < 1:
        raise ConfigurationError("max_iter must be at least 1")
    lo1, lo2 = domain.lower
    hi1, hi2 = domain.upper
    h = (hi1 - lo1) / (n - 1)
    if abs((hi2 - lo2) / (n - 1) - h) > 1e-12 * abs(h):
        raise ConfigurationError("grid oracle requires a square domain")
    x1 = np.linspace(lo1, hi1, n)
    x2 = np.linspace(lo2, hi2, n)

    U = np.zeros((n, n))
    for edge_points, sl in [
        (np.column_stack([x1, np.full(n, lo2)]), (slice(None), 0)),
        (np.column_stack([x1, np.full(n, hi2)]), (slice(None), -1)),
        (np.column_stack([np.full(n, lo1), x2]), (0, slice(None))),
        (np.column_stack([np.full(n, hi1), x2]), (-1, slice(None))),
    ]:
        U[sl] = g.evaluate(edge_points)
    ring = np.concatenate([U[:, 0], U[:, -1], U[0, 1:-1], U[-1, 1:-1]])
    U[1:-1, 1:-1] = np.mean(ring)  # flat start at the frame's mean level

    f_value = float(f.value) if hasattr(f, "value") else float(f)
    final_update = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        cx, cy = _face_coefficients(U, h)
        A, b = _picard_matrix(cx, cy, U, f_value, h, n)
        solved = spsolve(A, b).reshape(n - 2, n - 2)
        applied = damping * (solved - U[1:-1, 1:-1])
        U[1:-1, 1:-1] += applied
        final_update = float(np.max(np.abs(applied)))
        if final_update < tol:
            return Grid2D(n, domain, U, True, iterations, final_update)
    return Grid2D(n, domain, U, False, iterations, final_update)


def compare_model_to_grid(model, grid: Grid2D) -> GridComparison:
    """Error statistics of the model against the grid's interior nodes."""
    if getattr(model, "dimension", 2) != 2:
        raise ConfigurationError("grid comparison needs a 2-D model")
    diffs = model.values(grid.interior_points()) - grid.interior_values.ravel()
    return GridComparison(
        max_abs=float(np.max(np.abs(diffs))),
        mean_abs=float(np.mean(np.abs(diffs))),
        rms=float(np.sqrt(np.mean(diffs * diffs))),
    )

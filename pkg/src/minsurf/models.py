"""Uniform evaluation adapters over networks, closed forms, and tape graphs.

A "model" is anything with ``dimension``, ``values(points)``, and
``derivative_bundles(points)`` returning (values, gradients, hessians).
The loss, oracle-comparison, and slice code only ever talk to this surface,
so a trained network and an analytic reference are interchangeable.
"""

from __future__ import annotations

import numpy as np

from . import autodiff, network
from .errors import EvaluationError, StructuralError

__all__ = [
    "NetworkModel",
    "AnalyticFunctionModel",
    "GraphFunctionModel",
    "scherk_solution",
    "scherk_graph_builder",
]


class NetworkModel:
    """A parameter set behind the model surface."""

    def __init__(self, params: network.NetworkParams):
        self.params = params
        self.dimension = params.input_dim

    def values(self, points) -> np.ndarray:
        return network.forward_values(self.params, np.asarray(points, dtype=float))

    def values_and_gradients(self, points):
        state = network.NetworkState(self.params, np.asarray(points, dtype=float), order=1)
        return state.values.copy(), state.gradients.copy()

    def derivative_bundles(self, points):
        return network.network_bundles(self.params, np.asarray(points, dtype=float))


class AnalyticFunctionModel:
    """Closed-form value/gradient/hessian callables, each vectorized over rows."""

    def __init__(self, dimension: int, value_fn, gradient_fn, hessian_fn, name: str = ""):
        self.dimension = dimension
        self._value = value_fn
        self._gradient = gradient_fn
        self._hessian = hessian_fn
        self.name = name

    def _check(self, points) -> np.ndarray:
        X = np.asarray(points, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.dimension:
            raise StructuralError(
                f"points shape {X.shape} does not match dimension {self.dimension}"
            )
        return X

    def values(self, points) -> np.ndarray:
        u = np.asarray(self._value(self._check(points)), dtype=float)
        if not np.all(np.isfinite(u)):
            bad = int(np.flatnonzero(~np.isfinite(u))[0])
            raise EvaluationError(f"{self.name or 'analytic model'} non-finite at point {bad}")
        return u

    def values_and_gradients(self, points):
        X = self._check(points)
        return self.values(X), np.asarray(self._gradient(X), dtype=float)

    def derivative_bundles(self, points):
        X = self._check(points)
        return (self.values(X),
                np.asarray(self._gradient(X), dtype=float),
                np.asarray(self._hessian(X), dtype=float))


class GraphFunctionModel:
    """A tape-graph builder evaluated point by point through the autodiff engine.

    Slowest of the adapters; used where derivative provenance matters more
    than speed (oracle cross-checks, residual certification).
    """

    def __init__(self, dimension: int, builder, name: str = ""):
        self.dimension = dimension
        self.builder = builder
        self.name = name

    def values(self, points) -> np.ndarray:
        X = np.asarray(points, dtype=float)
        out = np.empty(X.shape[0])
        for n, row in enumerate(X):
            tape = autodiff.Tape()
            xs = [tape.input_var(v) for v in row]
            out[n] = self.builder(xs).value
        return out

    def derivative_bundles(self, points):
        X = np.asarray(points, dtype=float)
        n_pts = X.shape[0]
        d = self.dimension
        u = np.empty(n_pts)
        g = np.empty((n_pts, d))
        h = np.empty((n_pts, d, d))
        for n, row in enumerate(X):
            bundle = autodiff.eval_with_input_derivatives(self.builder, row)
            u[n], g[n], h[n] = bundle.value, bundle.gradient, bundle.hessian
        return u, g, h


def scherk_graph_builder(xs):
    """log(cos x2 / cos x1) lowered onto a tape, the oracle's autodiff route."""
    return autodiff.log(autodiff.cos(xs[1]) / autodiff.cos(xs[0]))


def _scherk_guard(X: np.ndarray) -> None:
    if np.any(np.abs(X) >= np.pi / 2):
        bad = int(np.flatnonzero(np.any(np.abs(X) >= np.pi / 2, axis=1))[0])
        raise EvaluationError(
            f"Scherk surface undefined at point {bad}: needs |x_i| < pi/2"
        )


def scherk_solution() -> AnalyticFunctionModel:
    """Exact Scherk first-surface cell with hand-differentiated derivatives.

    u = log(cos x2) - log(cos x1); grad = (tan x1, -tan x2);
    Hessian = diag(sec^2 x1, -sec^2 x2). An exact zero of the minimal
    surface operator wherever both cosines are positive.
    """

    def value(X):
        _scherk_guard(X)
        return np.log(np.cos(X[:, 1])) - np.log(np.cos(X[:, 0]))

    def gradient(X):
        _scherk_guard(X)
        return np.stack([np.tan(X[:, 0]), -np.tan(X[:, 1])], axis=1)

    def hessian(X):
        _scherk_guard(X)
        n = X.shape[0]
        h = np.zeros((n, 2, 2))
        h[:, 0, 0] = 1.0 / np.cos(X[:, 0]) ** 2
        h[:, 1, 1] = -1.0 / np.cos(X[:, 1]) ** 2
        return h

    return AnalyticFunctionModel(2, value, gradient, hessian, name="scherk")

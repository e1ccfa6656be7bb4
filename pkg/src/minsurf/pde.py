"""Minimal surface residual, Monte Carlo loss estimators, and surface energy.

The residual uses the expanded quotient form

    r = -(q tr(H) - g.H.g) / q^{3/2} - f,      q = 1 + |g|^2

with g the input gradient and H the input Hessian at one point. Expanding
the divergence this way makes per-point locality structural: the norm in
the denominator is built from that point's own gradient and nothing else,
which is the difference between a loss that trains and one that silently
couples samples. The Monte Carlo sums deliberately omit the |domain| and
|boundary| measure factors (the weights absorb any scale); the energy
estimate is the one place the domain volume genuinely belongs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, EvaluationError
from .network import NetworkParams, NetworkState

__all__ = [
    "LossBreakdown",
    "residual",
    "residual_values",
    "residual_derivative_seeds",
    "interior_loss",
    "boundary_loss",
    "total_loss",
    "energy",
    "loss_and_parameter_gradients",
]


@dataclass(frozen=True)
class LossBreakdown:
    """Unweighted terms plus the weighted total actually optimized."""

    interior_term: float
    boundary_term: float
    w_pde: float
    w_bdry: float
    total: float


def residual_values(gradients: np.ndarray, hessians: np.ndarray, f_values) -> np.ndarray:
    """Residual at every point given per-point gradients (N,d) and Hessians (N,d,d)."""
    g = np.asarray(gradients, dtype=float)
    h = np.asarray(hessians, dtype=float)
    q = 1.0 + np.sum(g * g, axis=1)
    tr = np.trace(h, axis1=1, axis2=2)
    hg = np.einsum("nij,nj->ni", h, g)
    ghg = np.sum(g * hg, axis=1)
    return -(q * tr - ghg) * q ** -1.5 - f_values


def residual(bundle, f_value: float = 0.0) -> float:
    """Single-point residual from a DerivativeBundle."""
    r = residual_values(bundle.gradient[None, :], bundle.hessian[None, :, :], f_value)
    return float(r[0])


def residual_derivative_seeds(gradients: np.ndarray, hessians: np.ndarray,
                              residual_bar: np.ndarray):
    """Adjoints (gradient_bar, hessian_bar) of sum_n residual_bar_n * r_n.

    dr/dH_ab = -q^{-3/2} (q delta_ab - g_a g_b)
    dr/dg_c  = -q^{-3/2} (2 g_c tr(H) - 2 (Hg)_c) + 3 A q^{-5/2} g_c,
    with A = q tr(H) - g.H.g.
    """
    g = np.asarray(gradients, dtype=float)
    h = np.asarray(hessians, dtype=float)
    rb = np.asarray(residual_bar, dtype=float)
    d = g.shape[1]
    q = 1.0 + np.sum(g * g, axis=1)
    tr = np.trace(h, axis1=1, axis2=2)
    hg = np.einsum("nij,nj->ni", h, g)
    ghg = np.sum(g * hg, axis=1)
    a = q * tr - ghg
    q32 = q ** -1.5
    q52 = q ** -2.5
    eye = np.eye(d)
    hessian_bar = (-rb * q32)[:, None, None] * (
        q[:, None, None] * eye[None, :, :] - g[:, :, None] * g[:, None, :]
    )
    gradient_bar = rb[:, None] * (
        -q32[:, None] * (2.0 * g * tr[:, None] - 2.0 * hg)
        + (3.0 * a * q52)[:, None] * g
    )
    return gradient_bar, hessian_bar


def _source_values(f, n: int) -> np.ndarray:
    if hasattr(f, "values"):
        return f.values(n)
    return np.full(n, float(f))


def interior_loss(points: np.ndarray, model, f=0.0) -> float:
    """(1/N) sum residual^2 over the interior samples, in index order."""
    X = np.asarray(points, dtype=float)
    if X.shape[0] < 1:
        raise ConfigurationError("interior loss needs at least one point")
    try:
        _, g, h = model.derivative_bundles(X)
    except EvaluationError:
        raise
    r = residual_values(g, h, _source_values(f, X.shape[0]))
    if not np.all(np.isfinite(r)):
        bad = int(np.flatnonzero(~np.isfinite(r))[0])
        raise EvaluationError(f"non-finite residual at interior point {bad}")
    return float(np.mean(r * r))


def boundary_loss(points: np.ndarray, g_values: np.ndarray, model) -> float:
    """(1/M) sum (u - g)^2 over the boundary samples, in index order."""
    X = np.asarray(points, dtype=float)
    g = np.asarray(g_values, dtype=float)
    if X.shape[0] < 1:
        raise ConfigurationError("boundary loss needs at least one point")
    if g.shape != (X.shape[0],):
        raise ConfigurationError("boundary g-values do not match point count")
    misfit = model.values(X) - g
    return float(np.mean(misfit * misfit))


def total_loss(interior_term: float, boundary_term: float,
               w_pde: float, w_bdry: float) -> LossBreakdown:
    if w_pde < 0 or w_bdry < 0:
        raise ConfigurationError("loss weights must be nonnegative")
    if w_pde == 0 and w_bdry == 0:
        raise ConfigurationError("at least one loss weight must be positive")
    return LossBreakdown(
        interior_term=float(interior_term),
        boundary_term=float(boundary_term),
        w_pde=float(w_pde),
        w_bdry=float(w_bdry),
        total=float(w_pde * interior_term + w_bdry * boundary_term),
    )


def residual_statistics(points: np.ndarray, model, f=0.0) -> dict:
    """max/mean/rms of |residual| over the points, for diagnostics."""
    X = np.asarray(points, dtype=float)
    if X.shape[0] < 1:
        raise ConfigurationError("residual statistics need at least one point")
    _, g, h = model.derivative_bundles(X)
    r = residual_values(g, h, _source_values(f, X.shape[0]))
    if not np.all(np.isfinite(r)):
        bad = int(np.flatnonzero(~np.isfinite(r))[0])
        raise EvaluationError(f"non-finite residual at point {bad}")
    a = np.abs(r)
    return {"max_abs": float(a.max()), "mean_abs": float(a.mean()),
            "rms": float(np.sqrt(np.mean(r * r))), "count": int(X.shape[0])}


def energy(points: np.ndarray, model, domain) -> float:
    """Monte Carlo surface-area estimate volume * mean sqrt(1 + |grad u|^2)."""
    X = np.asarray(points, dtype=float)
    if X.shape[0] < 1:
        raise ConfigurationError("energy estimate needs at least one point")
    if hasattr(model, "values_and_gradients"):
        _, g = model.values_and_gradients(X)
    else:
        _, g, _ = model.derivative_bundles(X)
    integrand = np.sqrt(1.0 + np.sum(np.asarray(g) ** 2, axis=1))
    return float(domain.volume * np.mean(integrand))


def loss_and_parameter_gradients(params: NetworkParams,
                                 interior_points: np.ndarray,
                                 boundary_points: np.ndarray,
                                 boundary_values: np.ndarray,
                                 f,
                                 w_pde: float,
                                 w_bdry: float):
    """One full-batch loss evaluation with parameter gradients, network path.

    Returns (LossBreakdown, weight gradients, bias gradients). The gradient
    seeds fold the loss weights in, so the returned arrays are gradients of
    the weighted total.
    """
    xi = np.asarray(interior_points, dtype=float)
    xb = np.asarray(boundary_points, dtype=float)
    gb = np.asarray(boundary_values, dtype=float)
    n, m = xi.shape[0], xb.shape[0]
    if n < 1 or m < 1:
        raise ConfigurationError("loss needs at least one interior and one boundary point")
    if gb.shape != (m,):
        raise ConfigurationError("boundary g-values do not match point count")

    interior_state = NetworkState(params, xi, order=2)
    r = residual_values(interior_state.gradients, interior_state.hessians,
                        _source_values(f, n))
    with np.errstate(over="ignore"):  # inf is the divergence signal, not an error
        interior_term = float(np.mean(r * r))

    boundary_state = NetworkState(params, xb, order=0)
    misfit = boundary_state.values - gb
    boundary_term = float(np.mean(misfit * misfit))

    breakdown = total_loss(interior_term, boundary_term, w_pde, w_bdry)

    grad_bar, hess_bar = residual_derivative_seeds(
        interior_state.gradients, interior_state.hessians,
        (2.0 * w_pde / n) * r)
    dw, db = interior_state.backward(gradient_bar=grad_bar, hessian_bar=hess_bar)
    dwb, dbb = boundary_state.backward(value_bar=(2.0 * w_bdry / m) * misfit)
    for a, b in zip(dw, dwb):
        a += b
    for a, b in zip(db, dbb):
        a += b
    return breakdown, dw, db

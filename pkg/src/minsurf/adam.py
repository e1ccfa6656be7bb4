"""Bias-corrected Adam over lists of parameter arrays."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NumericalError, StructuralError

__all__ = ["AdamState", "init_adam", "adam_step"]


@dataclass
class AdamState:
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def init_adam(arrays: list[np.ndarray], learning_rate: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    if not learning_rate > 0:
        raise ConfigurationError(f"learning rate must be positive, got {learning_rate}")
    if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
        raise ConfigurationError("Adam betas must lie in [0, 1)")
    if not eps > 0:
        raise ConfigurationError("Adam epsilon must be positive")
    return AdamState(learning_rate=learning_rate, beta1=beta1, beta2=beta2, eps=eps,
                     m=[np.zeros_like(a) for a in arrays],
                     v=[np.zeros_like(a) for a in arrays])


def adam_step(state: AdamState, arrays: list[np.ndarray],
              gradients: list[np.ndarray]) -> list[np.ndarray]:
    """One update; mutates state moments, returns new parameter arrays."""
    if len(arrays) != len(state.m) or len(gradients) != len(state.m):
        raise StructuralError("parameter/gradient count does not match optimizer state")
    for i, g in enumerate(gradients):
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient in parameter array {i}")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.t
    bc2 = 1.0 - b2 ** state.t
    out = []
    for a, g, m, v in zip(arrays, gradients, state.m, state.v):
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * np.square(g)
        step = state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        out.append(a - step)
    return out

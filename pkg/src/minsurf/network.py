"""Feed-forward network u(x; theta) plus input-derivative propagation.

Two evaluation routes share one parameter set and are cross-checked in the
test suite:

* ``build_graph`` lowers the network neuron by neuron onto an autodiff tape,
  which handles any derivative order but costs a Python-level graph per
  point; used for verification and small cases.
* ``NetworkState`` propagates value, input gradient, and input Hessian
  through the layers in closed form with numpy. Per layer the state is one
  matrix ``[h | J | H]`` with a row per neuron: the first N columns hold
  values at the N evaluation points, the next d*N columns the first
  derivatives (one block of N per input axis), the last d*d*N columns the
  second derivatives. A whole layer's linear map is then a single matrix
  product, and the activation adjusts the blocks with the chain rule:

      h  -> s(z)
      J_i -> s'(z) Jz_i
      H_ij -> s'(z) Hz_ij + s''(z) Jz_i Jz_j

  ``NetworkState.backward`` runs the hand-derived adjoint of that recursion
  (which needs s''') to produce parameter gradients of any scalar built
  from values, gradients, and Hessians.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autodiff
from .errors import ConfigurationError, StructuralError

__all__ = [
    "ACTIVATIONS",
    "CANONICAL_HIDDEN_WIDTHS",
    "LayerSpec",
    "NetworkParams",
    "canonical_layers",
    "init_network",
    "forward",
    "forward_values",
    "NetworkState",
    "network_bundles",
    "build_graph",
]

ACTIVATIONS = ("tanh", "relu", "identity")
CANONICAL_HIDDEN_WIDTHS = (32, 64, 128, 64)


@dataclass(frozen=True)
class LayerSpec:
    width: int
    activation: str = "tanh"

    def __post_init__(self):
        if not isinstance(self.width, int) or self.width < 1:
            raise ConfigurationError(f"layer width must be a positive integer, got {self.width!r}")
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(
                f"unknown activation {self.activation!r}; choose from {', '.join(ACTIVATIONS)}"
            )


def canonical_layers(activation: str = "tanh") -> tuple[LayerSpec, ...]:
    """The fixed 32-64-128-64 stack plus the linear scalar output layer."""
    hidden = tuple(LayerSpec(w, activation) for w in CANONICAL_HIDDEN_WIDTHS)
    return hidden + (LayerSpec(1, "identity"),)


class NetworkParams:
    """Weight matrices and bias vectors for one layer stack.

    Immutable by convention: evaluation never writes to the arrays, and the
    optimizer produces a fresh instance per step.
    """

    def __init__(self, input_dim: int, layer_specs: Sequence[LayerSpec],
                 weights: Sequence[np.ndarray], biases: Sequence[np.ndarray]):
        self.input_dim = input_dim
        self.layer_specs = tuple(layer_specs)
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        if len(self.layer_specs) != len(self.weights) or len(self.weights) != len(self.biases):
            raise StructuralError("layer specs, weights, and biases must align")
        fan_in = input_dim
        for spec, w, b in zip(self.layer_specs, self.weights, self.biases):
            if w.shape != (spec.width, fan_in):
                raise StructuralError(
                    f"weight shape {w.shape} does not chain (expected {(spec.width, fan_in)})"
                )
            if b.shape != (spec.width,):
                raise StructuralError(f"bias shape {b.shape} does not match width {spec.width}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise StructuralError("non-finite parameter entry")
            fan_in = spec.width

    @property
    def output_dim(self) -> int:
        return self.layer_specs[-1].width

    @property
    def param_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.input_dim, self.layer_specs,
                             [w.copy() for w in self.weights],
                             [b.copy() for b in self.biases])

    def arrays(self):
        """Yield (name, array) in a fixed order: W1, b1, W2, b2, ..."""
        for i, (w, b) in enumerate(zip(self.weights, self.biases), start=1):
            yield f"W{i}", w
            yield f"b{i}", b

    def equal(self, other: "NetworkParams") -> bool:
        return (self.input_dim == other.input_dim
                and self.layer_specs == other.layer_specs
                and all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))
                and all(np.array_equal(a, b) for a, b in zip(self.biases, other.biases)))


def init_network(input_dim: int, layer_specs: Sequence[LayerSpec] | None = None,
                 seed=0) -> NetworkParams:
    """Glorot-uniform weights, zero biases; a pure function of its arguments.

    ``seed`` may be an int, a SeedSequence, or a Generator.
    """
    if input_dim not in (2, 3, 4):
        raise ConfigurationError(f"input dimension must be 2, 3, or 4, got {input_dim!r}")
    if layer_specs is None:
        layer_specs = canonical_layers()
    layer_specs = tuple(layer_specs)
    if not layer_specs:
        raise ConfigurationError("layer spec list is empty")
    if layer_specs[-1].width != 1:
        raise ConfigurationError("last layer must have width 1")
    if layer_specs[-1].activation != "identity":
        raise ConfigurationError("output layer activation must be identity")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    fan_in = input_dim
    for spec in layer_specs:
        limit = np.sqrt(6.0 / (fan_in + spec.width))
        weights.append(rng.uniform(-limit, limit, size=(spec.width, fan_in)))
        biases.append(np.zeros(spec.width))
        fan_in = spec.width
    return NetworkParams(input_dim, layer_specs, weights, biases)


# -- activations -----------------------------------------------------------
# Each entry maps a pre-activation array to (s, s', s'', s''') up to the
# requested order; everything is derived from s itself where possible.


def _tanh_chain(z: np.ndarray, order: int):
    t = np.tanh(z)
    out = [t]
    if order >= 1:
        s1 = 1.0 - t * t
        out.append(s1)
    if order >= 2:
        out.append(-2.0 * t * s1)
    if order >= 3:
        out.append(-2.0 * s1 * (1.0 - 3.0 * t * t))
    return out


def _relu_chain(z: np.ndarray, order: int):
    out = [np.maximum(z, 0.0)]
    if order >= 1:
        out.append((z > 0.0).astype(float))
    while len(out) < order + 1:
        out.append(np.zeros_like(z))  # second derivative 0 almost everywhere
    return out


_CHAINS = {"tanh": _tanh_chain, "relu": _relu_chain}


# -- plain value evaluation ------------------------------------------------


def forward_values(params: NetworkParams, points: np.ndarray) -> np.ndarray:
    """u at each row of ``points``; shape (N,)."""
    X = np.asarray(points, dtype=float)
    if X.ndim != 2 or X.shape[1] != params.input_dim:
        raise StructuralError(
            f"points shape {X.shape} does not match input dimension {params.input_dim}"
        )
    h = X.T
    for spec, w, b in zip(params.layer_specs, params.weights, params.biases):
        z = w @ h + b[:, None]
        if spec.activation == "identity":
            h = z
        else:
            h = _CHAINS[spec.activation](z, 0)[0]
    return h[0]


def forward(params: NetworkParams, x: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (params.input_dim,):
        raise StructuralError(f"point has length {x.shape}, expected {params.input_dim}")
    return float(forward_values(params, x[None, :])[0])


# -- derivative-propagating state -----------------------------------------


class NetworkState:
    """One forward pass over N points with intermediates retained.

    ``order`` selects how much derivative state rides along: 0 values only,
    1 adds input gradients, 2 adds input Hessians. ``backward`` consumes
    adjoints of whatever the forward pass produced and returns gradients
    with respect to every weight and bias.
    """

    def __init__(self, params: NetworkParams, points: np.ndarray, order: int = 2):
        if order not in (0, 1, 2):
            raise StructuralError(f"order must be 0, 1, or 2, got {order!r}")
        X = np.asarray(points, dtype=float)
        d = params.input_dim
        if X.ndim != 2 or X.shape[1] != d:
            raise StructuralError(f"points shape {X.shape} does not match input dimension {d}")
        self.params = params
        self.order = order
        self.n_points = n = X.shape[0]
        self.dim = d

        blocks = 1 + (d if order >= 1 else 0) + (d * d if order >= 2 else 0)
        state = np.zeros((d, n * blocks))
        state[:, :n] = X.T
        if order >= 1:
            # dx_k/dx_i = delta_ki in the k-th row, i-th J block
            for i in range(d):
                state[i, n * (1 + i):n * (2 + i)] = 1.0
        # per layer: (input state, pre-activation, cached tanh value or None)
        self._trace: list[tuple[np.ndarray, np.ndarray, np.ndarray | None]] = []
        for spec, w, b in zip(params.layer_specs, params.weights, params.biases):
            z = w @ state
            z[:, :n] += b[:, None]
            if spec.activation == "identity":
                out, cache = z, None
            else:
                out, cache = self._activate(spec.activation, z)
            self._trace.append((state, z, cache))
            state = out
        self._out = state

    # block views ----------------------------------------------------------

    def _jview(self, m: np.ndarray) -> np.ndarray:
        n, d = self.n_points, self.dim
        return m[:, n:n * (1 + d)].reshape(m.shape[0], d, n)

    def _hview(self, m: np.ndarray) -> np.ndarray:
        n, d = self.n_points, self.dim
        return m[:, n * (1 + d):n * (1 + d + d * d)].reshape(m.shape[0], d, d, n)

    def _activate(self, name: str, z: np.ndarray):
        n = self.n_points
        zh = z[:, :n]
        if name == "tanh":
            t, s1, s2 = _tanh_chain(zh, 2)
            cache = t
        else:
            t, s1, s2 = _relu_chain(zh, 2)
            cache = None
        out = np.empty_like(z)
        out[:, :n] = t
        if self.order >= 1:
            zj = self._jview(z)
            np.multiply(s1[:, None, :], zj, out=self._jview(out))
        if self.order >= 2:
            zh2 = self._hview(z)
            oh = self._hview(out)
            np.multiply(s1[:, None, None, :], zh2, out=oh)
            if name == "tanh":  # relu's s'' is identically zero
                oh += s2[:, None, None, :] * (zj[:, :, None, :] * zj[:, None, :, :])
        return out, cache

    # outputs ---------------------------------------------------------------

    @property
    def values(self) -> np.ndarray:
        return self._out[0, :self.n_points]

    @property
    def gradients(self) -> np.ndarray:
        if self.order < 1:
            raise StructuralError("gradients not computed at order 0")
        return self._jview(self._out)[0].T  # (N, d)

    @property
    def hessians(self) -> np.ndarray:
        if self.order < 2:
            raise StructuralError("hessians not computed below order 2")
        return self._hview(self._out)[0].transpose(2, 0, 1)  # (N, d, d)

    # adjoint ----------------------------------------------------------------

    def backward(self, value_bar: np.ndarray | None = None,
                 gradient_bar: np.ndarray | None = None,
                 hessian_bar: np.ndarray | None = None):
        """Parameter gradients of sum_n(vbar_n u_n + gbar_n . grad_n + Hbar_n : Hess_n).

        Returns (weight gradients, bias gradients) aligned with the layer
        order of ``params``.
        """
        n, d = self.n_points, self.dim
        blocks = 1 + (d if self.order >= 1 else 0) + (d * d if self.order >= 2 else 0)
        a = np.zeros((1, n * blocks))
        if value_bar is not None:
            a[0, :n] = value_bar
        if gradient_bar is not None:
            if self.order < 1:
                raise StructuralError("gradient adjoint requires order >= 1")
            self._jview(a)[0] = np.asarray(gradient_bar).T
        if hessian_bar is not None:
            if self.order < 2:
                raise StructuralError("hessian adjoint requires order 2")
            self._hview(a)[0] = np.asarray(hessian_bar).transpose(1, 2, 0)

        d_weights = [None] * len(self.params.weights)
        d_biases = [None] * len(self.params.biases)
        for layer in range(len(self._trace) - 1, -1, -1):
            state_in, z, cache = self._trace[layer]
            spec = self.params.layer_specs[layer]
            if spec.activation == "identity":
                az = a
            else:
                az = self._activation_adjoint(spec.activation, z, cache, a)
            d_weights[layer] = az @ state_in.T
            d_biases[layer] = az[:, :n].sum(axis=1)
            if layer > 0:
                a = self.params.weights[layer].T @ az
        return d_weights, d_biases

    def _activation_adjoint(self, name: str, z: np.ndarray,
                            cache: np.ndarray | None, a: np.ndarray) -> np.ndarray:
        n = self.n_points
        zh = z[:, :n]
        if name == "tanh":
            t = cache
            s1 = 1.0 - t * t
            s2 = -2.0 * t * s1
            s3 = -2.0 * s1 * (1.0 - 3.0 * t * t)
        else:
            s1 = (zh > 0.0).astype(float)
            s2 = s3 = None  # identically zero
        az = np.empty_like(a)
        ah = a[:, :n]
        azh = az[:, :n]
        np.multiply(ah, s1, out=azh)
        if self.order >= 1:
            aj = self._jview(a)
            zj = self._jview(z)
            if s2 is not None:
                azh += s2 * np.einsum("win,win->wn", aj, zj)
        if self.order >= 2:
            ahh = self._hview(a)
            zhh = self._hview(z)
            if s2 is not None:
                azh += s2 * np.einsum("wijn,wijn->wn", ahh, zhh)
                # u_i = sum_j AH_ij Jz_j ; v_i = sum_j AH_ji Jz_j
                u = np.einsum("wijn,wjn->win", ahh, zj)
                v = np.einsum("wjin,wjn->win", ahh, zj)
                azh += s3 * np.einsum("win,win->wn", u, zj)
                np.multiply(aj, s1[:, None, :], out=self._jview(az))
                self._jview(az)[...] += s2[:, None, :] * (u + v)
            else:
                np.multiply(aj, s1[:, None, :], out=self._jview(az))
            np.multiply(ahh, s1[:, None, None, :], out=self._hview(az))
        elif self.order >= 1:
            np.multiply(aj, s1[:, None, :], out=self._jview(az))
        return az


def network_bundles(params: NetworkParams, points: np.ndarray):
    """(values, gradients, hessians) at each row of ``points``, no state kept."""
    state = NetworkState(params, points, order=2)
    return state.values.copy(), state.gradients.copy(), state.hessians.copy()


# -- scalar graph binding --------------------------------------------------


def build_graph(params: NetworkParams, tape: autodiff.Tape,
                x_nodes: Sequence[autodiff.Node], trainable: bool = False,
                param_nodes=None):
    """Lower the network onto a tape at one point.

    Returns (output node, parameter node structure or None). With
    ``trainable`` the weights become param_var leaves arranged as
    [[W rows...], [b entries...]] per layer, the shape ``param_gradient``
    hands back. Passing a previous call's ``param_nodes`` reuses those
    leaves, tying several evaluation points to one set of parameters.
    """
    if len(x_nodes) != params.input_dim:
        raise StructuralError(
            f"{len(x_nodes)} input nodes for input dimension {params.input_dim}"
        )
    if param_nodes is not None:
        trainable = True
    make = tape.param_var if trainable else tape.const
    param_structure = [] if trainable else None
    h = list(x_nodes)
    for li, (spec, w, b) in enumerate(zip(params.layer_specs, params.weights,
                                          params.biases)):
        if param_nodes is not None:
            w_nodes, b_nodes = param_nodes[li]
        else:
            w_nodes = [[make(wij) for wij in row] for row in w]
            b_nodes = [make(bi) for bi in b]
        if trainable:
            param_structure.append([w_nodes, b_nodes])
        out = []
        for row, bias in zip(w_nodes, b_nodes):
            z = row[0] * h[0]
            for wj, hj in zip(row[1:], h[1:]):
                z = z + wj * hj
            z = z + bias
            if spec.activation == "tanh":
                z = autodiff.tanh(z)
            elif spec.activation == "relu":
                z = autodiff.relu(z)
            out.append(z)
        h = out
    return h[0], param_structure

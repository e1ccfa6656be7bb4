"""Scalar reverse-mode automatic differentiation on an explicit tape.

The tape is an append-only list of primitive operations. Every node caches
its value eagerly, so building an expression also evaluates it. A reverse
sweep can either accumulate plain floats (cheap, terminal) or append new
nodes that *represent* the derivative (``create_graph=True``); in the second
form the gradient is itself an expression on the same tape, so sweeping it
again yields Hessian entries, and sweeping those yields third derivatives.
That nesting is what lets a second-order PDE residual be differentiated once
more with respect to network parameters.

Leaves come in three flavours: ``input_var`` (differentiated with respect to
in ``gradient``/Hessian sweeps), ``param_var`` (differentiated by
``param_gradient``), and ``const``. Changing a leaf with ``set_value`` plus
``recompute`` re-evaluates the whole tape in place, which is how finite
difference checks re-run a function without rebuilding its graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import EvaluationError, StructuralError

__all__ = [
    "Tape",
    "Node",
    "DerivativeBundle",
    "DerivativeCheckReport",
    "eval_with_input_derivatives",
    "param_gradient",
    "check_derivatives",
    "sin",
    "cos",
    "tan",
    "tanh",
    "exp",
    "log",
    "sqrt",
    "absval",
    "relu",
]

# Ops with no operands
_LEAF_OPS = ("const", "input", "param")
# step(x) = 1 for x > 0 else 0; sign(x) = +/-1, 0 at 0. Internal: they are
# the (sub)derivatives of relu and abs and have derivative zero themselves.
_KINK_OPS = ("relu", "abs", "step", "sign")


class Node:
    """Handle to one tape position. Cheap; identity is (tape, index)."""

    __slots__ = ("tape", "index")

    def __init__(self, tape: "Tape", index: int):
        self.tape = tape
        self.index = index

    @property
    def value(self) -> float:
        return self.tape.values[self.index]

    @property
    def op(self) -> str:
        return self.tape.ops[self.index]

    def _coerce(self, other) -> "Node":
        if isinstance(other, Node):
            if other.tape is not self.tape:
                raise StructuralError("cannot combine nodes from different tapes")
            return other
        return self.tape.const(float(other))

    def __add__(self, other):
        return self.tape._push("add", self.index, self._coerce(other).index)

    def __radd__(self, other):
        return self._coerce(other).__add__(self)

    def __sub__(self, other):
        return self.tape._push("sub", self.index, self._coerce(other).index)

    def __rsub__(self, other):
        return self._coerce(other).__sub__(self)

    def __mul__(self, other):
        return self.tape._push("mul", self.index, self._coerce(other).index)

    def __rmul__(self, other):
        return self._coerce(other).__mul__(self)

    def __truediv__(self, other):
        return self.tape._push("div", self.index, self._coerce(other).index)

    def __rtruediv__(self, other):
        return self._coerce(other).__truediv__(self)

    def __neg__(self):
        return self.tape._push("neg", self.index)

    def __pow__(self, exponent):
        if isinstance(exponent, Node):
            raise StructuralError("exponent must be a plain number, not a node")
        return self.tape._push("powc", self.index, aux=float(exponent))

    def __repr__(self):
        return f"Node({self.op}@{self.index}={self.value!r})"


class Tape:
    """Append-only operation record with eager evaluation."""

    def __init__(self):
        self.ops: list[str] = []
        self.arg_a: list[int] = []
        self.arg_b: list[int] = []
        self.aux: list[float] = []  # const value / powc exponent, else 0.0
        self.values: list[float] = []
        self.input_indices: list[int] = []
        self.param_indices: list[int] = []

    def __len__(self) -> int:
        return len(self.ops)

    # -- construction ------------------------------------------------------

    def _push(self, op: str, a: int = -1, b: int = -1, aux: float = 0.0) -> Node:
        v = self._apply(op, a, b, aux)
        if not math.isfinite(v):
            raise EvaluationError(
                f"{op} produced non-finite value at node {len(self.ops)}"
                + (f" (operand value {self.values[a]!r})" if a >= 0 else "")
            )
        self.ops.append(op)
        self.arg_a.append(a)
        self.arg_b.append(b)
        self.aux.append(aux)
        self.values.append(v)
        return Node(self, len(self.ops) - 1)

    def const(self, value: float) -> Node:
        return self._push("const", aux=float(value))

    def input_var(self, value: float) -> Node:
        node = self._push("input", aux=float(value))
        self.input_indices.append(node.index)
        return node

    def param_var(self, value: float) -> Node:
        node = self._push("param", aux=float(value))
        self.param_indices.append(node.index)
        return node

    # -- evaluation --------------------------------------------------------

    def _apply(self, op: str, a: int, b: int, aux: float) -> float:
        va = self.values[a] if a >= 0 else 0.0
        vb = self.values[b] if b >= 0 else 0.0
        if op in _LEAF_OPS:
            return aux
        if op == "add":
            return va + vb
        if op == "sub":
            return va - vb
        if op == "mul":
            return va * vb
        if op == "div":
            return va / vb if vb != 0.0 else math.inf
        if op == "neg":
            return -va
        if op == "sin":
            return math.sin(va)
        if op == "cos":
            return math.cos(va)
        if op == "tanh":
            return math.tanh(va)
        if op == "exp":
            return math.exp(va) if va < 709.0 else math.inf
        if op == "log":
            return math.log(va) if va > 0.0 else math.inf
        if op == "sqrt":
            return math.sqrt(va) if va >= 0.0 else math.nan
        if op == "relu":
            return va if va > 0.0 else 0.0
        if op == "abs":
            return abs(va)
        if op == "step":
            return 1.0 if va > 0.0 else 0.0
        if op == "sign":
            return 0.0 if va == 0.0 else math.copysign(1.0, va)
        if op == "powc":
            try:
                return math.pow(va, aux)
            except ValueError:
                return math.nan
        raise StructuralError(f"unknown op {op!r}")

    def set_value(self, node: Node, value: float) -> None:
        """Reassign a leaf. Takes effect after ``recompute``."""
        if node.tape is not self:
            raise StructuralError("node belongs to a different tape")
        if self.ops[node.index] not in _LEAF_OPS:
            raise StructuralError("only leaf nodes can be reassigned")
        self.aux[node.index] = float(value)

    def recompute(self) -> None:
        """Re-evaluate every node in tape order with current leaf values."""
        values = self.values
        for i in range(len(self.ops)):
            v = self._apply(self.ops[i], self.arg_a[i], self.arg_b[i], self.aux[i])
            if not math.isfinite(v):
                raise EvaluationError(
                    f"recompute hit non-finite value at node {i} ({self.ops[i]})"
                )
            values[i] = v

    # -- reverse sweeps ----------------------------------------------------

    def gradient(self, output: Node, wrt: Sequence[Node], create_graph: bool = False):
        """Adjoints of ``output`` with respect to ``wrt``.

        Returns floats, or derivative-expression nodes on this same tape when
        ``create_graph`` is set (so the results can be differentiated again).
        """
        if output.tape is not self:
            raise StructuralError("output node belongs to a different tape")
        for w in wrt:
            if w.tape is not self:
                raise StructuralError("wrt node belongs to a different tape")
        if create_graph:
            return self._gradient_graph(output, wrt)
        return self._gradient_numeric(output, wrt)

    def _gradient_numeric(self, output: Node, wrt: Sequence[Node]) -> list[float]:
        top = output.index
        adj = [0.0] * (top + 1)
        adj[top] = 1.0
        ops, aa, ab, aux, val = self.ops, self.arg_a, self.arg_b, self.aux, self.values
        for i in range(top, -1, -1):
            ad = adj[i]
            if ad == 0.0:
                continue
            op = ops[i]
            if op in _LEAF_OPS:
                continue
            a, b = aa[i], ab[i]
            if op == "add":
                adj[a] += ad
                adj[b] += ad
            elif op == "sub":
                adj[a] += ad
                adj[b] -= ad
            elif op == "mul":
                adj[a] += ad * val[b]
                adj[b] += ad * val[a]
            elif op == "div":
                adj[a] += ad / val[b]
                adj[b] -= ad * val[a] / (val[b] * val[b])
            elif op == "neg":
                adj[a] -= ad
            elif op == "sin":
                adj[a] += ad * math.cos(val[a])
            elif op == "cos":
                adj[a] -= ad * math.sin(val[a])
            elif op == "tanh":
                adj[a] += ad * (1.0 - val[i] * val[i])
            elif op == "exp":
                adj[a] += ad * val[i]
            elif op == "log":
                adj[a] += ad / val[a]
            elif op == "sqrt":
                adj[a] += ad * 0.5 / val[i]
            elif op == "relu":
                if val[a] > 0.0:
                    adj[a] += ad
            elif op == "abs":
                if val[a] != 0.0:
                    adj[a] += ad * math.copysign(1.0, val[a])
            elif op in ("step", "sign"):
                pass  # derivative zero everywhere it exists
            elif op == "powc":
                c = aux[i]
                if c != 0.0:
                    adj[a] += ad * c * math.pow(val[a], c - 1.0)
            else:
                raise StructuralError(f"unknown op {op!r}")
        out = [adj[w.index] if w.index <= top else 0.0 for w in wrt]
        for w, g in zip(wrt, out):
            if not math.isfinite(g):
                raise EvaluationError(
                    f"gradient w.r.t. node {w.index} is non-finite"
                )
        return out

    def _gradient_graph(self, output: Node, wrt: Sequence[Node]) -> list[Node]:
        top = output.index
        adj: dict[int, Node] = {top: self.const(1.0)}
        ops, aa, ab, aux = self.ops, self.arg_a, self.arg_b, self.aux
        # Descending sweep; derivative nodes appended here get indices > top
        # and are never revisited by this sweep.
        for i in range(top, -1, -1):
            ad = adj.get(i)
            if ad is None:
                continue
            op = ops[i]
            if op in _LEAF_OPS:
                continue
            a, b = aa[i], ab[i]
            node_i = Node(self, i)
            node_a = Node(self, a) if a >= 0 else None
            node_b = Node(self, b) if b >= 0 else None
            if op == "add":
                self._acc(adj, a, ad)
                self._acc(adj, b, ad)
            elif op == "sub":
                self._acc(adj, a, ad)
                self._acc(adj, b, -ad)
            elif op == "mul":
                self._acc(adj, a, ad * node_b)
                self._acc(adj, b, ad * node_a)
            elif op == "div":
                self._acc(adj, a, ad / node_b)
                self._acc(adj, b, -(ad * node_i / node_b))
            elif op == "neg":
                self._acc(adj, a, -ad)
            elif op == "sin":
                self._acc(adj, a, ad * self._push("cos", a))
            elif op == "cos":
                self._acc(adj, a, -(ad * self._push("sin", a)))
            elif op == "tanh":
                self._acc(adj, a, ad * (self.const(1.0) - node_i * node_i))
            elif op == "exp":
                self._acc(adj, a, ad * node_i)
            elif op == "log":
                self._acc(adj, a, ad / node_a)
            elif op == "sqrt":
                self._acc(adj, a, ad * self.const(0.5) / node_i)
            elif op == "relu":
                self._acc(adj, a, ad * self._push("step", a))
            elif op == "abs":
                self._acc(adj, a, ad * self._push("sign", a))
            elif op in ("step", "sign"):
                pass
            elif op == "powc":
                c = aux[i]
                if c != 0.0:
                    powered = self._push("powc", a, aux=c - 1.0)
                    self._acc(adj, a, ad * self.const(c) * powered)
            else:
                raise StructuralError(f"unknown op {op!r}")
        zero = None
        out = []
        for w in wrt:
            g = adj.get(w.index)
            if g is None:
                if zero is None:
                    zero = self.const(0.0)
                g = zero
            out.append(g)
        return out

    @staticmethod
    def _acc(adj: dict[int, Node], index: int, contribution: Node) -> None:
        prior = adj.get(index)
        adj[index] = contribution if prior is None else prior + contribution

    def kink_nodes_near(self, tolerance: float) -> list[tuple[int, str, float]]:
        """Kink-op nodes whose operand sits within ``tolerance`` of zero."""
        hits = []
        for i, op in enumerate(self.ops):
            if op in _KINK_OPS:
                operand = self.values[self.arg_a[i]]
                if abs(operand) <= tolerance:
                    hits.append((i, op, operand))
        return hits


# -- module-level math on nodes -------------------------------------------


def _unary(op: str, x: Node) -> Node:
    return x.tape._push(op, x.index)


def sin(x: Node) -> Node:
    return _unary("sin", x)


def cos(x: Node) -> Node:
    return _unary("cos", x)


def tan(x: Node) -> Node:
    # No primitive: keeps the op set minimal and the reverse rules short.
    return _unary("sin", x) / _unary("cos", x)


def tanh(x: Node) -> Node:
    return _unary("tanh", x)


def exp(x: Node) -> Node:
    return _unary("exp", x)


def log(x: Node) -> Node:
    return _unary("log", x)


def sqrt(x: Node) -> Node:
    return _unary("sqrt", x)


def absval(x: Node) -> Node:
    return _unary("abs", x)


def relu(x: Node) -> Node:
    return _unary("relu", x)


# -- bundles and top-level drivers ----------------------------------------


@dataclass
class DerivativeBundle:
    """Value, gradient, and Hessian of a scalar function at one point."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray

    def __post_init__(self):
        self.gradient = np.asarray(self.gradient, dtype=float)
        self.hessian = np.asarray(self.hessian, dtype=float)
        d = self.gradient.shape[0]
        if self.hessian.shape != (d, d):
            raise StructuralError(
                f"hessian shape {self.hessian.shape} does not match gradient length {d}"
            )


_SYMMETRY_TOL = 1e-9


def _build(f, tape: Tape, xs: list[Node]):
    """Normalize a function-builder into (output node, params or None).

    ``f`` receives the list of input nodes and returns either the output
    node or a (output, parameter-structure) pair, where the structure is
    arbitrarily nested lists/tuples of param nodes.
    """
    result = f(xs)
    if isinstance(result, tuple):
        y, params = result
    else:
        y, params = result, None
    if not isinstance(y, Node):
        raise StructuralError("function builder must return a tape node")
    if y.tape is not tape:
        raise StructuralError("function builder returned a node from a foreign tape")
    return y, params


def eval_with_input_derivatives(f, x: Sequence[float]) -> DerivativeBundle:
    """Value, gradient, and full Hessian of ``f`` at ``x``.

    The gradient sweep runs with ``create_graph=True`` so each component is
    itself a tape expression; one more numeric sweep per component fills in
    a Hessian row. Raises if the result is asymmetric beyond roundoff, which
    would mean a broken reverse rule.
    """
    tape = Tape()
    xs = [tape.input_var(v) for v in x]
    y, _ = _build(f, tape, xs)
    grad_nodes = tape.gradient(y, xs, create_graph=True)
    d = len(xs)
    hess = np.empty((d, d))
    for i, g in enumerate(grad_nodes):
        hess[i, :] = tape.gradient(g, xs)
    asym = np.max(np.abs(hess - hess.T)) if d else 0.0
    scale = max(1.0, float(np.max(np.abs(hess))) if d else 0.0)
    if asym > _SYMMETRY_TOL * scale:
        raise EvaluationError(f"hessian asymmetry {asym:.3e} exceeds tolerance")
    hess = 0.5 * (hess + hess.T)
    return DerivativeBundle(y.value, np.array([g.value for g in grad_nodes]), hess)


def _flatten_params(structure, out: list[Node]) -> None:
    if isinstance(structure, Node):
        out.append(structure)
    elif isinstance(structure, (list, tuple)):
        for item in structure:
            _flatten_params(item, out)
    else:
        raise StructuralError(
            f"parameter structure may contain only nodes and lists, got {type(structure).__name__}"
        )


def _reshape_like(structure, flat_iter):
    if isinstance(structure, Node):
        return next(flat_iter)
    return [_reshape_like(item, flat_iter) for item in structure]


def param_gradient(loss: Node, params):
    """Gradient of ``loss`` with respect to a nested structure of param nodes.

    Returns floats arranged in the same nesting as ``params``.
    """
    flat: list[Node] = []
    _flatten_params(params, flat)
    grads = loss.tape.gradient(loss, flat)
    return _reshape_like(params, iter(grads))


@dataclass
class DerivativeCheckReport:
    """Engine-vs-finite-difference agreement at one evaluation point."""

    step: float
    gradient_max_rel_error: float
    hessian_max_rel_error: float
    param_gradient_max_rel_error: float | None
    nondifferentiable_nodes: list[tuple[int, str, float]] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.nondifferentiable_nodes


def _rel_err(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1.0)


def check_derivatives(f, x: Sequence[float], step: float = 1e-5) -> DerivativeCheckReport:
    """Compare engine derivatives at ``x`` against central finite differences.

    Uses the same tape for every FD evaluation (leaves reassigned, tape
    recomputed), so engine and FD see literally the same expression. Kink
    primitives (relu/abs and their derivative ops) whose operand lies within
    ``step`` of zero are reported: there the FD stencil straddles a corner
    and disagreement is expected rather than a bug.
    """
    if not (0.0 < step <= 1e-2):
        raise StructuralError(f"step must lie in (0, 1e-2], got {step!r}")
    x = [float(v) for v in x]
    d = len(x)

    tape = Tape()
    xs = [tape.input_var(v) for v in x]
    y, params = _build(f, tape, xs)

    grad_nodes = tape.gradient(y, xs, create_graph=True)
    grad = [g.value for g in grad_nodes]
    hess = np.empty((d, d))
    for i, g in enumerate(grad_nodes):
        hess[i, :] = tape.gradient(g, xs)

    def eval_at(point: Sequence[float]) -> float:
        for node, v in zip(xs, point):
            tape.set_value(node, v)
        tape.recompute()
        return tape.values[y.index]

    f0 = eval_at(x)
    h = step
    grad_err = 0.0
    for i in range(d):
        xp = list(x)
        xp[i] = x[i] + h
        fp = eval_at(xp)
        xp[i] = x[i] - h
        fm = eval_at(xp)
        grad_err = max(grad_err, _rel_err(grad[i], (fp - fm) / (2.0 * h)))

    hess_err = 0.0
    for i in range(d):
        for j in range(i, d):
            xp = list(x)
            if i == j:
                xp[i] = x[i] + h
                fp = eval_at(xp)
                xp[i] = x[i] - h
                fm = eval_at(xp)
                fd = (fp - 2.0 * f0 + fm) / (h * h)
            else:
                acc = 0.0
                for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                    xp = list(x)
                    xp[i] = x[i] + si * h
                    xp[j] = x[j] + sj * h
                    acc += si * sj * eval_at(xp)
                fd = acc / (4.0 * h * h)
            hess_err = max(hess_err, _rel_err(hess[i, j], fd))

    param_err = None
    if params is not None:
        flat: list[Node] = []
        _flatten_params(params, flat)
        eval_at(x)  # restore inputs before the engine param sweep
        engine = tape.gradient(y, flat)
        param_err = 0.0
        for node, g in zip(flat, engine):
            p0 = tape.values[node.index]
            tape.set_value(node, p0 + h)
            tape.recompute()
            fp = tape.values[y.index]
            tape.set_value(node, p0 - h)
            tape.recompute()
            fm = tape.values[y.index]
            tape.set_value(node, p0)
            param_err = max(param_err, _rel_err(g, (fp - fm) / (2.0 * h)))
        tape.recompute()

    eval_at(x)  # leave the tape at the original point
    return DerivativeCheckReport(
        step=h,
        gradient_max_rel_error=grad_err,
        hessian_max_rel_error=hess_err,
        param_gradient_max_rel_error=param_err,
        nondifferentiable_nodes=tape.kink_nodes_near(h),
    )

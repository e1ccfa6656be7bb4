"""Frame data: a small expression language, piecewise boundaries, builtins.

Boundary values g and source terms f come either from a named builtin or
from an expression string like ``sin(2*pi*x1) + cos(2*pi*x2)``. Expressions
evaluate vectorized over numpy arrays and can also be lowered onto an
autodiff tape, so the same text drives both fast evaluation and exact
derivative checks.

Grammar (
    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | power
    power  := atom ("^" ["-"] NUMBER)?
    atom   := NUMBER | "pi" | VARIABLE | FUNC "(" expr ("," expr)* ")"
            | "(" expr ")"
) with variables x1..x4 and functions sin, cos, tan, log, exp, sqrt, abs,
and the variadic norm2(a, b, ...) = sqrt(a^2 + b^2 + ...).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from . import autodiff
from .errors import ConfigurationError, EvaluationError, ParseError
from .sampling import BoxDomain

__all__ = [
    "Expr",
    "parse_expression",
    "BoundaryPiece",
    "BoundaryFn",
    "SourceTerm",
    "eval_g",
    "lookup_builtin",
    "builtin_names",
    "list_boundaries",
]

_FUNCTIONS = {"sin": 1, "cos": 1, "tan": 1, "log": 1, "exp": 1, "sqrt": 1,
              "abs": 1, "norm2": None}  # None = one or more arguments
_MAX_VARS = 4


# -- tokenizer -------------------------------------------------------------

_NUM_RE = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_OPS = set("+-*/^(),")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch.isspace():
            pos += 1
            continue
        if ch in _OPS:
            tokens.append(("op", ch, pos))
            pos += 1
            continue
        m = _NUM_RE.match(text, pos)
        if m:
            tokens.append(("num", m.group(), pos))
            pos = m.end()
            continue
        m = _IDENT_RE.match(text, pos)
        if m:
            tokens.append(("ident", m.group(), pos))
            pos = m.end()
            continue
        raise ParseError(f"unexpected character {ch!r}", pos)
    tokens.append(("end", "", n))
    return tokens


# -- syntax tree -----------------------------------------------------------


@dataclass(frozen=True)
class ExprNode:
    kind: str  # num | var | pi | add | sub | mul | div | neg | pow | call
    children: tuple["ExprNode", ...] = ()
    value: float | None = None  # num literal, or pow exponent
    index: int | None = None  # var axis, 0-based
    name: str | None = None  # call function name


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, op: str):
        kind, val, off = self.peek()
        if kind != "op" or val != op:
            got = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {op!r}, got {got}", off)
        return self.next()

    def parse(self) -> ExprNode:
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing input {val!r}", off)
        return node

    def expr(self) -> ExprNode:
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.next()
                rhs = self.term()
                node = ExprNode("add" if val == "+" else "sub", (node, rhs))
            else:
                return node

    def term(self) -> ExprNode:
        node = self.factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.next()
                rhs = self.factor()
                node = ExprNode("mul" if val == "*" else "div", (node, rhs))
            else:
                return node

    def factor(self) -> ExprNode:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.next()
            return ExprNode("neg", (self.factor(),))
        return self.power()

    def power(self) -> ExprNode:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.next()
            sign = 1.0
            kind, val, off = self.peek()
            if kind == "op" and val == "-":
                self.next()
                sign = -1.0
                kind, val, off = self.peek()
            if kind != "num":
                got = "end of input" if kind == "end" else repr(val)
                raise ParseError(f"expected numeric exponent, got {got}", off)
            self.next()
            return ExprNode("pow", (base,), value=sign * float(val))
        return base

    def atom(self) -> ExprNode:
        kind, val, off = self.next()
        if kind == "num":
            return ExprNode("num", value=float(val))
        if kind == "ident":
            if val == "pi":
                return ExprNode("pi")
            m = re.fullmatch(r"x([1-9]\d*)", val)
            if m:
                idx = int(m.group(1))
                if idx > _MAX_VARS:
                    raise ParseError(f"variable {val!r} out of range, only x1..x{_MAX_VARS} exist", off)
                return ExprNode("var", index=idx - 1, name=val)
            if val in _FUNCTIONS:
                self.expect("(")
                args = [self.expr()]
                while True:
                    kind2, val2, _ = self.peek()
                    if kind2 == "op" and val2 == ",":
                        self.next()
                        args.append(self.expr())
                    else:
                        break
                self.expect(")")
                arity = _FUNCTIONS[val]
                if arity is not None and len(args) != arity:
                    raise ParseError(f"{val} takes {arity} argument(s), got {len(args)}", off)
                return ExprNode("call", tuple(args), name=val)
            raise ParseError(f"unknown name {val!r}", off)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        got = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"expected expression, got {got}", off)


def _max_var_index(node: ExprNode) -> int:
    idx = node.index if node.kind == "var" else -1
    for child in node.children:
        idx = max(idx, _max_var_index(child))
    return idx


def _eval_array(node: ExprNode, X: np.ndarray):
    k = node.kind
    if k == "num":
        return node.value
    if k == "pi":
        return math.pi
    if k == "var":
        return X[:, node.index]
    if k == "neg":
        return -_eval_array(node.children[0], X)
    if k in ("add", "sub", "mul", "div"):
        a = _eval_array(node.children[0], X)
        b = _eval_array(node.children[1], X)
        if k == "add":
            return a + b
        if k == "sub":
            return a - b
        if k == "mul":
            return a * b
        return np.divide(a, b)
    if k == "pow":
        return np.power(_eval_array(node.children[0], X), node.value)
    # call
    args = [_eval_array(c, X) for c in node.children]
    name = node.name
    if name == "norm2":
        total = 0.0
        for a in args:
            total = total + np.square(a)
        return np.sqrt(total)
    fn = {"sin": np.sin, "cos": np.cos, "tan": np.tan, "log": np.log,
          "exp": np.exp, "sqrt": np.sqrt, "abs": np.abs}[name]
    return fn(args[0])


def _to_tape(node: ExprNode, tape, xs):
    k = node.kind
    if k == "num":
        return tape.const(node.value)
    if k == "pi":
        return tape.const(math.pi)
    if k == "var":
        return xs[node.index]
    if k == "neg":
        return -_to_tape(node.children[0], tape, xs)
    if k in ("add", "sub", "mul", "div"):
        a = _to_tape(node.children[0], tape, xs)
        b = _to_tape(node.children[1], tape, xs)
        return {"add": lambda: a + b, "sub": lambda: a - b,
                "mul": lambda: a * b, "div": lambda: a / b}[k]()
    if k == "pow":
        return _to_tape(node.children[0], tape, xs) ** node.value
    args = [_to_tape(c, tape, xs) for c in node.children]
    name = node.name
    if name == "norm2":
        total = args[0] * args[0]
        for a in args[1:]:
            total = total + a * a
        return autodiff.sqrt(total)
    fn = {"sin": autodiff.sin, "cos": autodiff.cos, "tan": autodiff.tan,
          "log": autodiff.log, "exp": autodiff.exp, "sqrt": autodiff.sqrt,
          "abs": autodiff.absval}[name]
    return fn(args[0])


_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 2, "pow": 3}


def _render_num(v: float) -> str:
    if v == math.floor(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _unparse(node: ExprNode, context: int = 0) -> str:
    k = node.kind
    if k == "num":
        s = _render_num(node.value)
        return f"({s})" if s.startswith("-") else s
    if k == "pi":
        return "pi"
    if k == "var":
        return node.name
    if k == "call":
        return f"{node.name}({', '.join(_unparse(c) for c in node.children)})"
    if k == "neg":
        # grammar-wise the operand of unary minus is a factor, so anything
        # looser than ^ needs parentheses: -(a*b) is not -a*b
        inner = _unparse(node.children[0], _PREC["neg"] + 1)
        s = f"-{inner}"
        return f"({s})" if context > _PREC["neg"] else s
    if k == "pow":
        base = _unparse(node.children[0], _PREC["pow"] + 1)
        s = f"{base}^{_render_num(node.value)}"
        return f"({s})" if context > _PREC["pow"] else s
    prec = _PREC[k]
    op = {"add": " + ", "sub": " - ", "mul": "*", "div": "/"}[k]
    left = _unparse(node.children[0], prec)
    # the right operand always gets the tighter context: the grammar is left
    # associative, so a right-nested same-precedence child must keep parens
    # (a*(b/c) is not (a*b)/c in floating point)
    right = _unparse(node.children[1], prec + 1)
    s = f"{left}{op}{right}"
    return f"({s})" if context > prec else s


class Expr:
    """A parsed expression over variables x1..x4."""

    def __init__(self, root: ExprNode, source: str | None = None):
        self.root = root
        self.source = source

    @property
    def max_var_index(self) -> int:
        """Highest 0-based variable index used, -1 for constant expressions."""
        return _max_var_index(self.root)

    def check_dim(self, dim: int, context: str = "expression"):
        idx = self.max_var_index
        if idx >= dim:
            raise ConfigurationError(
                f"{context} uses variable x{idx + 1} but the domain has only {dim} coordinates")

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """Vectorized evaluation over rows of X; raises on non-finite output."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise EvaluationError(f"expected a 2-d point array, got shape {X.shape}")
        with np.errstate(all="ignore"):
            out = _eval_array(self.root, X)
        out = np.broadcast_to(np.asarray(out, dtype=float), (X.shape[0],)).copy()
        if not np.all(np.isfinite(out)):
            bad = int(np.argmin(np.isfinite(out)))
            raise EvaluationError(
                f"expression is non-finite at point {tuple(X[bad])}")
        return out

    def eval_at(self, x) -> float:
        return float(self.evaluate(np.asarray(x, dtype=float).reshape(1, -1))[0])

    def to_tape(self, tape, xs: list):
        """Lower onto an autodiff tape with input nodes xs."""
        if self.max_var_index >= len(xs):
            raise ConfigurationError(
                f"expression uses x{self.max_var_index + 1} but only {len(xs)} inputs were given")
        return _to_tape(self.root, tape, xs)

    def unparse(self) -> str:
        return _unparse(self.root)

    def __eq__(self, other):
        return isinstance(other, Expr) and self.root == other.root

    def __hash__(self):
        return hash(self.root)

    def __repr__(self):
        return f"Expr({self.unparse()!r})"


def parse_expression(text: str) -> Expr:
    """Parse expression text; ParseError carries the character offset."""
    if not isinstance(text, str):
        raise ParseError("expression must be a string", 0)
    if not text.strip():
        raise ParseError("empty expression", 0)
    return Expr(_Parser(text).parse(), source=text)


# -- boundary functions ----------------------------------------------------


def _fmt_bound(v: float) -> str:
    return _render_num(v)


@dataclass(frozen=True)
class BoundaryPiece:
    axis: int  # 0-based
    side: int  # 0 = lower face, 1 = upper face
    expr: Expr


class BoundaryFn:
    """Dirichlet data on the box boundary: one global formula or per-face pieces.

    Piecewise boundaries assign shared points (edges, corners) to the piece
    with the lowest (axis, side) pair, so evaluation is deterministic even
    where faces overlap.
    """

    def __init__(self, domain: BoxDomain, expr: Expr | None = None,
                 pieces: list[BoundaryPiece] | None = None,
                 name: str | None = None, description: str = ""):
        if (expr is None) == (pieces is None):
            raise ConfigurationError("provide exactly one of a global expression or pieces")
        self.domain = domain
        self.name = name
        self.description = description
        self.expr = expr
        d = domain.dim
        if expr is not None:
            expr.check_dim(d, "boundary expression")
            self.pieces: tuple[BoundaryPiece, ...] = ()
        else:
            seen = {}
            for p in pieces:
                if not (0 <= p.axis < d):
                    raise ConfigurationError(f"piece axis {p.axis + 1} outside dimension {d}")
                if p.side not in (0, 1):
                    raise ConfigurationError(f"piece side must be 0 or 1, got {p.side}")
                if (p.axis, p.side) in seen:
                    raise ConfigurationError(
                        f"face {self._face_label(p.axis, p.side)} declared twice")
                p.expr.check_dim(d, f"boundary piece {self._face_label(p.axis, p.side)}")
                seen[(p.axis, p.side)] = p
            missing = [(a, s) for a in range(d) for s in (0, 1) if (a, s) not in seen]
            if missing:
                labels = ", ".join(self._face_label(a, s) for a, s in missing)
                raise ConfigurationError(f"piecewise boundary leaves faces uncovered: {labels}")
            self.pieces = tuple(seen[k] for k in sorted(seen))

    def _face_label(self, axis: int, side: int) -> str:
        bound = self.domain.upper[axis] if side else self.domain.lower[axis]
        return f"x{axis + 1}={_fmt_bound(bound)}"

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def is_piecewise(self) -> bool:
        return bool(self.pieces)

    def _face_masks(self, X: np.ndarray) -> dict[tuple[int, int], np.ndarray]:
        lo, hi = self.domain.lo_array(), self.domain.hi_array()
        tol = 1e-12 * max(1.0, float(np.max(hi - lo)))
        masks = {}
        for axis in range(self.dim):
            masks[(axis, 0)] = np.abs(X[:, axis] - lo[axis]) <= tol
            masks[(axis, 1)] = np.abs(X[:, axis] - hi[axis]) <= tol
        return masks

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """Boundary values at points on the frame, shape [n]."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise EvaluationError(f"expected points of shape [n, {self.dim}], got {X.shape}")
        if self.expr is not None:
            return self.expr.evaluate(X)
        masks = self._face_masks(X)
        out = np.empty(X.shape[0])
        unassigned = np.ones(X.shape[0], dtype=bool)
        for p in self.pieces:
            take = masks[(p.axis, p.side)] & unassigned
            if take.any():
                out[take] = p.expr.evaluate(X[take])
                unassigned &= ~take
        if unassigned.any():
            bad = int(np.argmax(unassigned))
            raise EvaluationError(
                f"point {tuple(X[bad])} lies on no declared boundary face")
        return out

    def eval_at(self, x) -> float:
        return float(self.evaluate(np.asarray(x, dtype=float).reshape(1, -1))[0])

    def on_domain(self, domain: BoxDomain) -> "BoundaryFn":
        """The same formulas bound to another box of equal dimension."""
        if domain.dim != self.dim:
            raise ConfigurationError(
                f"cannot rebind a {self.dim}-dimensional boundary to dimension {domain.dim}")
        if self.expr is not None:
            return BoundaryFn(domain, expr=self.expr, name=self.name,
                              description=self.description)
        return BoundaryFn(domain, pieces=list(self.pieces), name=self.name,
                          description=self.description)

    def piece_values(self, x) -> list[tuple[str, float]]:
        """(label, value) from every piece whose face contains x.

        Global boundaries report a single ("g", value) entry. Used by the
        corner-consistency check.
        """
        x = np.asarray(x, dtype=float).reshape(1, -1)
        if self.expr is not None:
            return [("g", float(self.expr.evaluate(x)[0]))]
        masks = self._face_masks(x)
        hits = []
        for p in self.pieces:
            if masks[(p.axis, p.side)][0]:
                hits.append((self._face_label(p.axis, p.side),
                             float(p.expr.evaluate(x)[0])))
        if not hits:
            raise EvaluationError(f"point {tuple(x[0])} lies on no declared boundary face")
        return hits

    def __repr__(self):
        tag = self.name or ("piecewise" if self.is_piecewise else self.expr.unparse())
        return f"BoundaryFn({tag}, dim={self.dim})"


def eval_g(g: BoundaryFn, x) -> float:
    """Boundary value at a single point."""
    return g.eval_at(x)


@dataclass(frozen=True)
class SourceTerm:
    """Right-hand side f; constant (default 0 for the homogeneous equation)."""

    value: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ConfigurationError("source term must be finite")

    def values(self, n: int) -> np.ndarray:
        return np.full(n, float(self.value))


# -- builtin boundaries ----------------------------------------------------


@dataclass(frozen=True)
class _Builtin:
    name: str
    dim: int
    domain: BoxDomain
    description: str
    expr_text: str | None = None
    piece_texts: tuple[tuple[int, int, str], ...] = ()


_BUILTINS = {
    b.name: b for b in [
        _Builtin(
            "scherk", 2, BoxDomain.cube(-1.5, 1.5, 2),
            "trace of the exact surface log(cos(x2)/cos(x1))",
            expr_text="log(cos(x2)/cos(x1))"),
        _Builtin(
            "radial_sine_2d", 2, BoxDomain.unit(2),
            "sine ripple radiating from the square's center",
            expr_text="sin(norm2(5*(x1 - 0.5), 5*(x2 - 0.5)))"),
        _Builtin(
            "four_sided_2d", 2, BoxDomain.unit(2),
            "four unrelated edge formulas, deliberately mismatched at two corners",
            piece_texts=(
                (0, 0, "cos(2*pi*x1) + cos(2*pi*x2)"),
                (0, 1, "1"),
                (1, 0, "abs(cos(pi*x1) + sin(pi*x1)) + abs(cos(pi*x2) + sin(pi*x2))"),
                (1, 1, "sin(2*pi*x1) + cos(2*pi*x1)"),
            )),
        _Builtin(
            "abs_cos_3d", 3, BoxDomain.unit(3),
            "nested sine of cosine over summed coordinate distances from the center",
            expr_text="sin(cos(2*pi*(abs(x1 - 0.5) + abs(x2 - 0.5) + abs(x3 - 0.5))))"),
        _Builtin(
            "trig_sum_3d", 3, BoxDomain.unit(3),
            "separable sum of one full sine or cosine period per axis",
            expr_text="sin(2*pi*x1) + cos(2*pi*x2) + sin(2*pi*x3)"),
        _Builtin(
            "radial_sine_4d", 4, BoxDomain.unit(4),
            "amplitude-2 sine ripple radiating from the hypercube's center",
            expr_text="2*sin(10*norm2(x1 - 0.5, x2 - 0.5, x3 - 0.5, x4 - 0.5))"),
    ]
}


def builtin_names() -> list[str]:
    return list(_BUILTINS)


def lookup_builtin(name: str, domain: BoxDomain | None = None) -> BoundaryFn:
    """Construct a named builtin boundary, on its canonical domain by default.

    An explicit ``domain`` of the same dimension rebinds the formulas to
    another box, e.g. restricting the exact-surface trace for oracle runs.
    """
    if name not in _BUILTINS:
        known = ", ".join(_BUILTINS)
        raise ConfigurationError(f"unknown boundary {name!r}; builtins: {known}")
    b = _BUILTINS[name]
    if domain is None:
        domain = b.domain
    elif domain.dim != b.dim:
        raise ConfigurationError(
            f"boundary {name!r} is {b.dim}-dimensional, domain has {domain.dim}")
    if b.expr_text is not None:
        return BoundaryFn(domain, expr=parse_expression(b.expr_text),
                          name=b.name, description=b.description)
    pieces = [BoundaryPiece(axis, side, parse_expression(text))
              for axis, side, text in b.piece_texts]
    return BoundaryFn(domain, pieces=pieces, name=b.name, description=b.description)


def list_boundaries() -> list[tuple[str, int, str]]:
    """(name, dimension, description) for every builtin, registry order."""
    return [(b.name, b.dim, b.description) for b in _BUILTINS.values()]

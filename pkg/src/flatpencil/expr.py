"""Closed-form coordinate expressions with exact complex jets to third order.

Expressions are parsed into a small AST over the variables u1..uN, complex
literals and the functions exp, ln, sin, cos, sqrt.  Evaluation propagates
truncated Taylor data (value, gradient, Hessian, third-order tensor) through
the tree, so every partial derivative up to the requested order is analytic,
not finite-differenced.  All arithmetic is complex; principal branches are
used for ln and sqrt.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ArityError, DomainError, ParseError

MAX_ORDER = 3

# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Const:
    value: complex


@dataclass(frozen=True)
class Var:
    index: int  # zero-based


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-', '*', '/'
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str  # 'exp', 'ln', 'sin', 'cos', 'sqrt'
    arg: "Node"


@dataclass(frozen=True)
class Partial:
    """Derivative of a subtree with respect to one coordinate.

    Evaluated by computing the inner jet one order higher and slicing, so a
    Partial node reduces the maximum jet order available above it.
    """

    arg: "Node"
    index: int


Node = Union[Const, Var, BinOp, Neg, Pow, Call, Partial]


# Simplifying constructors used by symbolic differentiation; they fold
# constants and drop zero/one factors so repeated derivatives stay small.

_ZERO = Const(0j)
_ONE = Const(1 + 0j)


def _is_const(node, value):
    return isinstance(node, Const) and node.value == value


def _neg_node(a):
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _add_node(a, b):
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return BinOp("+", a, b)


def _sub_node(a, b):
    if _is_const(b, 0):
        return a
    if _is_const(a, 0):
        return _neg_node(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return BinOp("-", a, b)


def _mul_node(a, b):
    if _is_const(a, 0) or _is_const(b, 0):
        return _ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return BinOp("*", a, b)


def _div_node(a, b):
    if _is_const(a, 0):
        return _ZERO
    if _is_const(b, 1):
        return a
    return BinOp("/", a, b)


def _diff_node(node, k):
    """Symbolic derivative of a subtree with respect to coordinate k."""
    if isinstance(node, Const):
        return _ZERO
    if isinstance(node, Var):
        return _ONE if node.index == k else _ZERO
    if isinstance(node, Neg):
        return _neg_node(_diff_node(node.arg, k))
    if isinstance(node, BinOp):
        da = _diff_node(node.left, k)
        db = _diff_node(node.right, k)
        if node.op == "+":
            return _add_node(da, db)
        if node.op == "-":
            return _sub_node(da, db)
        if node.op == "*":
            return _add_node(
                _mul_node(da, node.right), _mul_node(node.left, db)
            )
        # quotient rule
        num = _sub_node(_mul_node(da, node.right), _mul_node(node.left, db))
        return _div_node(num, Pow(node.right, 2))
    if isinstance(node, Pow):
        e = node.exponent
        if e == 0:
            return _ZERO
        db = _diff_node(node.base, k)
        if e == 1:
            return db
        return _mul_node(
            _mul_node(Const(complex(e)), Pow(node.base, e - 1)), db
        )
    if isinstance(node, Call):
        da = _diff_node(node.arg, k)
        a = node.arg
        if node.func == "exp":
            return _mul_node(node, da)
        if node.func == "ln":
            return _div_node(da, a)
        if node.func == "sin":
            return _mul_node(Call("cos", a), da)
        if node.func == "cos":
            return _neg_node(_mul_node(Call("sin", a), da))
        if node.func == "sqrt":
            return _div_node(da, _mul_node(Const(2 + 0j), node))
        raise ValueError(f"unknown function {node.func!r}")
    if isinstance(node, Partial):
        # mixed partials commute for the smooth fields handled here
        return Partial(_diff_node(node.arg, k), node.index)
    raise TypeError(f"unexpected node {node!r}")


# ---------------------------------------------------------------------------
# Jets


def _outer(a, b):
    return np.einsum("...i,...j->...ij", a, b)


def _sym_pair(h, v):
    """P[abc] = h_ab v_c + h_ac v_b + h_bc v_a (h symmetric)."""
    t = np.einsum("...ab,...c->...abc", h, v)
    return t + np.swapaxes(t, -1, -2) + np.moveaxis(t, -1, -3)


def _mirror2(t):
    n = t.shape[-1]
    for a in range(n):
        for b in range(a + 1, n):
            t[..., b, a] = t[..., a, b]
    return t


def _mirror3(t):
    n = t.shape[-1]
    for a in range(n):
        for b in range(a, n):
            for c in range(b, n):
                v = t[..., a, b, c]
                t[..., a, c, b] = v
                t[..., b, a, c] = v
                t[..., b, c, a] = v
                t[..., c, a, b] = v
                t[..., c, b, a] = v
    return t


class Jet:
    """Taylor data of a scalar function at a (possibly batched) point.

    value has the batch shape B; grad is B+(n,), hess B+(n,n), third
    B+(n,n,n).  Slots above ``order`` are zero.
    """

    __slots__ = ("n", "order", "value", "grad", "hess", "third")

    def __init__(self, n, order, value, grad, hess, third):
        self.n = n
        self.order = order
        self.value = value
        self.grad = grad
        self.hess = hess
        self.third = third

    @staticmethod
    def constant(c, n, order, batch_shape):
        value = np.full(batch_shape, complex(c), dtype=complex)
        return Jet(
            n,
            order,
            value,
            np.zeros(batch_shape + (n,), dtype=complex),
            np.zeros(batch_shape + (n, n), dtype=complex),
            np.zeros(batch_shape + (n, n, n), dtype=complex),
        )

    @staticmethod
    def variable(i, point, order):
        batch = point.shape[:-1]
        n = point.shape[-1]
        j = Jet.constant(0.0, n, order, batch)
        j.value = point[..., i].astype(complex)
        if order >= 1:
            j.grad[..., i] = 1.0
        return j

    def _zeros_like(self):
        return Jet.constant(0.0, self.n, self.order, self.value.shape)

    def __add__(self, other):
        return Jet(
            self.n,
            self.order,
            self.value + other.value,
            self.grad + other.grad,
            self.hess + other.hess,
            self.third + other.third,
        )

    def __sub__(self, other):
        return Jet(
            self.n,
            self.order,
            self.value - other.value,
            self.grad - other.grad,
            self.hess - other.hess,
            self.third - other.third,
        )

    def __neg__(self):
        return Jet(self.n, self.order, -self.value, -self.grad, -self.hess, -self.third)

    def __mul__(self, other):
        f, g = self, other
        out = f._zeros_like()
        fv = f.value[..., None]
        gv = g.value[..., None]
        out.value = f.value * g.value
        if f.order >= 1:
            out.grad = f.grad * gv + fv * g.grad
        if f.order >= 2:
            out.hess = (
                f.hess * gv[..., None]
                + _outer(f.grad, g.grad)
                + _outer(g.grad, f.grad)
                + fv[..., None] * g.hess
            )
            _mirror2(out.hess)
        if f.order >= 3:
            out.third = (
                f.third * gv[..., None, None]
                + _sym_pair(f.hess, g.grad)
                + _sym_pair(g.hess, f.grad)
                + fv[..., None, None] * g.third
            )
            _mirror3(out.third)
        return out

    def compose(self, d0, d1, d2, d3):
        """Chain rule for phi(self) given derivatives of phi at self.value."""
        out = self._zeros_like()
        out.value = d0
        if self.order >= 1:
            out.grad = d1[..., None] * self.grad
        if self.order >= 2:
            out.hess = d1[..., None, None] * self.hess + d2[..., None, None] * _outer(
                self.grad, self.grad
            )
            _mirror2(out.hess)
        if self.order >= 3:
            g1 = self.grad
            out.third = (
                d1[..., None, None, None] * self.third
                + d2[..., None, None, None] * _sym_pair(self.hess, g1)
                + d3[..., None, None, None]
                * np.einsum("...a,...b,...c->...abc", g1, g1, g1)
            )
            _mirror3(out.third)
        return out

    def reciprocal(self):
        v = self.value
        if np.any(v == 0):
            raise DomainError("division by zero")
        return self.compose(1.0 / v, -1.0 / v**2, 2.0 / v**3, -6.0 / v**4)

    def __truediv__(self, other):
        return self * other.reciprocal()

    def powi(self, e):
        v = self.value
        if e == 0:
            return Jet.constant(1.0, self.n, self.order, v.shape)
        if e < 0 and np.any(v == 0):
            raise DomainError("zero raised to a negative power")
        d = [v ** complex(e)]
        coeff = 1.0
        for k in range(1, MAX_ORDER + 1):
            coeff *= e - (k - 1)
            if coeff == 0:
                d.append(np.zeros_like(v))
            else:
                d.append(coeff * v ** complex(e - k))
        return self.compose(*d)


def _call_jet(func, j):
    v = j.value
    if func == "exp":
        w = np.exp(v)
        return j.compose(w, w, w, w)
    if func == "ln":
        if np.any(v == 0):
            raise DomainError("ln of zero")
        return j.compose(np.log(v), 1.0 / v, -1.0 / v**2, 2.0 / v**3)
    if func == "sin":
        s, c = np.sin(v), np.cos(v)
        return j.compose(s, c, -s, -c)
    if func == "cos":
        s, c = np.sin(v), np.cos(v)
        return j.compose(c, -s, -c, s)
    if func == "sqrt":
        if j.order >= 1 and np.any(v == 0):
            raise DomainError("sqrt derivative at zero")
        r = np.sqrt(v)
        if j.order == 0:
            z = np.zeros_like(v)
            return j.compose(r, z, z, z)
        return j.compose(r, 0.5 / r, -0.25 / (v * r), 0.375 / (v**2 * r))
    raise ValueError(f"unknown function {func!r}")


def _eval_node(node, point, order):
    n = point.shape[-1]
    batch = point.shape[:-1]
    if isinstance(node, Const):
        return Jet.constant(node.value, n, order, batch)
    if isinstance(node, Var):
        return Jet.variable(node.index, point, order)
    if isinstance(node, Neg):
        return -_eval_node(node.arg, point, order)
    if isinstance(node, BinOp):
        a = _eval_node(node.left, point, order)
        b = _eval_node(node.right, point, order)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a / b
    if isinstance(node, Pow):
        return _eval_node(node.base, point, order).powi(node.exponent)
    if isinstance(node, Call):
        return _call_jet(node.func, _eval_node(node.arg, point, order))
    if isinstance(node, Partial):
        if order + 1 > MAX_ORDER:
            raise ValueError(
                "derivative field evaluated beyond available jet order"
            )
        inner = _eval_node(node.arg, point, order + 1)
        k = node.index
        out = Jet.constant(0.0, n, order, batch)
        out.value = inner.grad[..., k].copy()
        if order >= 1:
            out.grad = inner.hess[..., k, :].copy()
        if order >= 2:
            out.hess = inner.third[..., k, :, :].copy()
        return out
    raise TypeError(f"unexpected node {node!r}")


# ---------------------------------------------------------------------------
# Scalar fields


class ScalarField:
    """Immutable coordinate expression u1..uN -> C, differentiable to order 3."""

    __slots__ = ("source_text", "ast", "dim")

    def __init__(self, source_text, ast, dim):
        if dim < 1:
            raise ValueError("dimension must be positive")
        object.__setattr__(self, "source_text", source_text)
        object.__setattr__(self, "ast", ast)
        object.__setattr__(self, "dim", dim)

    def __setattr__(self, name, value):
        raise AttributeError("ScalarField is immutable")

    def __repr__(self):
        return f"ScalarField({self.source_text!r}, dim={self.dim})"

    def eval_jet(self, point, order=3):
        """Jet of the field at `point` (length-dim vector or batch thereof)."""
        if not 0 <= order <= MAX_ORDER:
            raise ValueError("order must be in 0..3")
        pt = np.asarray(point, dtype=complex)
        if pt.shape[-1] != self.dim:
            raise ArityError(
                f"point has {pt.shape[-1]} components, field has dim {self.dim}"
            )
        jet = _eval_node(self.ast, pt, order)
        if not np.all(np.isfinite(jet.value)):
            raise DomainError(f"non-finite value of {self.source_text!r}")
        if pt.ndim == 1:
            jet.value = complex(jet.value)
        return jet

    def __call__(self, point):
        return self.eval_jet(point, order=0).value

    def partial(self, k):
        """Field of the partial derivative with respect to u^{k+1} (k zero-based)."""
        if not 0 <= k < self.dim:
            raise ArityError(f"no coordinate index {k} in dim {self.dim}")
        return ScalarField(
            f"d{k + 1}({self.source_text})", _diff_node(self.ast, k), self.dim
        )

    # -- combinators ---------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, ScalarField):
            if other.dim != self.dim:
                raise ArityError("dimension mismatch between fields")
            return other
        return constant(other, self.dim)

    def __add__(self, other):
        o = self._coerce(other)
        return ScalarField(
            f"({self.source_text})+({o.source_text})", BinOp("+", self.ast, o.ast), self.dim
        )

    def __radd__(self, other):
        return self._coerce(other) + self

    def __sub__(self, other):
        o = self._coerce(other)
        return ScalarField(
            f"({self.source_text})-({o.source_text})", BinOp("-", self.ast, o.ast), self.dim
        )

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        return ScalarField(
            f"({self.source_text})*({o.source_text})", BinOp("*", self.ast, o.ast), self.dim
        )

    def __rmul__(self, other):
        return self._coerce(other) * self

    def __truediv__(self, other):
        o = self._coerce(other)
        return ScalarField(
            f"({self.source_text})/({o.source_text})", BinOp("/", self.ast, o.ast), self.dim
        )

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __neg__(self):
        return ScalarField(f"-({self.source_text})", Neg(self.ast), self.dim)

    def __pow__(self, e):
        if not isinstance(e, int):
            raise TypeError("only integer powers; use sqrt/exp/ln for fractional")
        return ScalarField(f"({self.source_text})^{e}", Pow(self.ast, e), self.dim)


def constant(c, dim):
    c = complex(c)
    return ScalarField(_format_complex(c), Const(c), dim)


def variable(i, dim):
    """The coordinate field u^{i+1} (i zero-based)."""
    if not 0 <= i < dim:
        raise ArityError(f"variable index {i} out of range for dim {dim}")
    return ScalarField(f"u{i + 1}", Var(i), dim)


def _wrap_call(func, f):
    return ScalarField(f"{func}({f.source_text})", Call(func, f.ast), f.dim)


def exp(f):
    return _wrap_call("exp", f)


def ln(f):
    return _wrap_call("ln", f)


def sin(f):
    return _wrap_call("sin", f)


def cos(f):
    return _wrap_call("cos", f)


def sqrt(f):
    return _wrap_call("sqrt", f)


def _remap(node, mapping, new_dim):
    if isinstance(node, Const):
        return node
    if isinstance(node, Var):
        return Var(mapping[node.index])
    if isinstance(node, Neg):
        return Neg(_remap(node.arg, mapping, new_dim))
    if isinstance(node, BinOp):
        return BinOp(node.op, _remap(node.left, mapping, new_dim), _remap(node.right, mapping, new_dim))
    if isinstance(node, Pow):
        return Pow(_remap(node.base, mapping, new_dim), node.exponent)
    if isinstance(node, Call):
        return Call(node.func, _remap(node.arg, mapping, new_dim))
    if isinstance(node, Partial):
        return Partial(_remap(node.arg, mapping, new_dim), mapping[node.index])
    raise TypeError(node)


def embed(f, index, dim):
    """Lift a single-variable field to dimension `dim`, reading u^{index+1}."""
    if f.dim != 1:
        raise ArityError("embed expects a single-variable field")
    if not 0 <= index < dim:
        raise ArityError(f"target index {index} out of range for dim {dim}")
    ast = _remap(f.ast, {0: index}, dim)
    return ScalarField(f.source_text.replace("u1", f"u{index + 1}"), ast, dim)


def _format_complex(c):
    if c.imag == 0:
        r = c.real
        return str(int(r)) if r == int(r) else repr(r)
    return f"({c.real}+{c.imag}i)"


# ---------------------------------------------------------------------------
# Parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)

_FUNCTIONS = ("exp", "ln", "sin", "cos", "sqrt")
_VAR_RE = re.compile(r"^u([1-9][0-9]*)$")


@dataclass
class _Token:
    kind: str  # 'number', 'ident', 'op', 'end'
    text: str
    pos: int


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            kind = m.lastgroup
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, dim):
        self.text = text
        self.dim = dim
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect_op(self, op):
        t = self.next()
        if t.kind != "op" or t.text != op:
            raise ParseError(f"expected {op!r}", t.pos)
        return t

    def parse(self):
        node = self.expr()
        t = self.peek()
        if t.kind != "end":
            raise ParseError(f"unexpected trailing input {t.text!r}", t.pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.next().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.next().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        t = self.peek()
        if t.kind == "op" and t.text == "-":
            self.next()
            return Neg(self.unary())
        if t.kind == "op" and t.text == "+":
            self.next()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        t = self.peek()
        if t.kind == "op" and t.text == "^":
            self.next()
            sign = 1
            t2 = self.peek()
            if t2.kind == "op" and t2.text == "-":
                self.next()
                sign = -1
            t3 = self.next()
            if t3.kind != "number" or "." in t3.text or "e" in t3.text or "E" in t3.text:
                raise ParseError("exponent must be an integer literal", t3.pos)
            return Pow(base, sign * int(t3.text))
        return base

    def atom(self):
        t = self.next()
        if t.kind == "number":
            value = float(t.text)
            nxt = self.peek()
            if nxt.kind == "ident" and nxt.text == "i":
                self.next()
                return Const(complex(0.0, value))
            return Const(complex(value))
        if t.kind == "ident":
            if t.text == "i":
                return Const(1j)
            m = _VAR_RE.match(t.text)
            if m:
                idx = int(m.group(1))
                if idx > self.dim:
                    raise ArityError(
                        f"variable u{idx} out of range for dimension {self.dim}"
                    )
                return Var(idx - 1)
            if t.text in _FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(t.text, arg)
            raise ParseError(f"unknown identifier {t.text!r}", t.pos)
        if t.kind == "op" and t.text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ParseError(f"unexpected token {t.text!r}", t.pos)


def parse(text, dim):
    """Parse an expression into a ScalarField of the given dimension."""
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty expression", 0)
    if dim < 1:
        raise ValueError("dimension must be positive")
    ast = _Parser(text, dim).parse()
    return ScalarField(text, ast, dim)

"""Lagrangian expression language.

Grammar (whitespace-insensitive)::

    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'

Known functions: sin, cos, exp, log, sqrt, abs.  Any identifier is a free
variable; it must be bound in the evaluation environment or evaluation
fails.  Slot names are fixed by the problem dimension (qdot/q/tau in 1D,
qx/qy/q/x/y in 2D, qx1../q/x1.. in ND); the operators that consume a
Lagrangian enforce their slot sets.

Evaluation runs in real mode when every binding is real and in complex
mode otherwise.  Real mode raises on domain violations (sqrt/log of a
non-positive value, a negative base under a fractional power) instead of
silently switching branches; complex mode uses principal branches.
Bindings may be numpy arrays, in which case evaluation is elementwise and
errors carry the flat index of the first offending node.

Exact first partial derivatives come from forward-mode dual numbers;
nesting duals (``second_partials``) gives exact second partials.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from . import dual
from .dual import Dual
from .errors import EvalError, ExprSyntaxError, UnknownFunctionError

__all__ = [
    "LagrangianExpr",
    "parse",
    "serialize",
    "evaluate",
    "partial",
    "second_partials",
    "KNOWN_FUNCTIONS",
]

KNOWN_FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "abs")


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    child: object


@dataclass(frozen=True)
class Bin:
    op: str
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object


@dataclass(frozen=True)
class LagrangianExpr:
    """Parsed expression tree plus the exact set of identifiers it uses."""

    ast: object
    free_vars: frozenset


# ---------------------------------------------------------------------------
# Tokenizer / parser


_TOKEN_RE = re.compile(
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
)


def _tokenize(source: str):
    """Yield (kind, text, offset) with 1-based offsets; append an EOF token."""
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        ch = source[pos]
        if ch.isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {ch!r}", pos + 1)
        kind = m.lastgroup
        tokens.append((kind, m.group(), pos + 1))
        pos = m.end()
    tokens.append(("eof", "", n + 1))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def parse_expr(self):
        node = self.parse_term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.advance()[1]
            node = Bin(op, node, self.parse_term())
        return node

    def parse_term(self):
        node = self.parse_unary()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.advance()[1]
            node = Bin(op, node, self.parse_unary())
        return node

    def parse_unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.advance()
            return Neg(self.parse_unary())
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        if self.peek()[:2] == ("op", "^"):
            self.advance()
            return Bin("^", base, self.parse_unary())
        return base

    def parse_atom(self):
        kind, text, offset = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(text))
        if kind == "ident":
            self.advance()
            if self.peek()[:2] == ("op", "("):
                if text not in KNOWN_FUNCTIONS:
                    raise UnknownFunctionError(
                        f"unknown function {text!r}", offset,
                        expected="one of " + ", ".join(KNOWN_FUNCTIONS))
                self.advance()
                arg = self.parse_expr()
                self._expect_close()
                return Call(text, arg)
            return Var(text)
        if (kind, text) == ("op", "("):
            self.advance()
            node = self.parse_expr()
            self._expect_close()
            return node
        if kind == "eof":
            raise ExprSyntaxError("unexpected end of input", offset,
                                  expected="a value")
        raise ExprSyntaxError(f"unexpected token {text!r}", offset,
                              expected="a value")

    def _expect_close(self):
        kind, text, offset = self.peek()
        if (kind, text) != ("op", ")"):
            raise ExprSyntaxError("unclosed parenthesis", offset, expected="')'")
        self.advance()


def _collect_vars(node, out):
    if isinstance(node, Var):
        out.add(node.name)
    elif isinstance(node, Neg):
        _collect_vars(node.child, out)
    elif isinstance(node, Bin):
        _collect_vars(node.lhs, out)
        _collect_vars(node.rhs, out)
    elif isinstance(node, Call):
        _collect_vars(node.arg, out)


def parse(source: str) -> LagrangianExpr:
    """Parse ``source`` into an expression tree.

    Syntax errors raise ExprSyntaxError with a 1-based byte offset; an
    unknown function name raises the distinct UnknownFunctionError.
    """
    if not isinstance(source, str) or not source.strip():
        raise ExprSyntaxError("empty expression", 1, expected="a value")
    parser = _Parser(_tokenize(source))
    ast = parser.parse_expr()
    kind, text, offset = parser.peek()
    if kind != "eof":
        raise ExprSyntaxError(f"unexpected trailing input {text!r}", offset)
    names = set()
    _collect_vars(ast, names)
    return LagrangianExpr(ast, frozenset(names))


def serialize(expr: LagrangianExpr) -> str:
    """Fully parenthesised text form; reparsing yields an identical tree."""
    return _ser(expr.ast)


def _ser(node) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{_ser(node.child)})"
    if isinstance(node, Bin):
        return f"({_ser(node.lhs)} {node.op} {_ser(node.rhs)})"
    if isinstance(node, Call):
        return f"{node.fn}({_ser(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# Evaluation


def _is_complex_binding(v):
    v = dual.primal(v)
    return isinstance(v, complex) or np.iscomplexobj(v)


def _bad_index(mask):
    mask = np.asarray(mask)
    if mask.ndim == 0:
        return None
    return int(np.argmax(mask.ravel()))


def _check(mask, message):
    """Raise EvalError if any element of ``mask`` is truthy."""
    if np.any(mask):
        idx = _bad_index(mask)
        where = "" if idx is None else f" (node {idx})"
        raise EvalError(message + where, index=idx)


def _int_literal(node):
    """Return the integer value of a literal exponent node, or None."""
    neg = False
    while isinstance(node, Neg):
        neg = not neg
        node = node.child
    if isinstance(node, Num) and float(node.value).is_integer():
        n = int(node.value)
        return -n if neg else n
    return None


class _Evaluator:
    def __init__(self, env, complex_mode):
        self.env = env
        self.complex_mode = complex_mode

    def eval(self, node):
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Var):
            try:
                return self.env[node.name]
            except KeyError:
                raise EvalError(f"unbound variable {node.name!r}") from None
        if isinstance(node, Neg):
            return -self.eval(node.child)
        if isinstance(node, Bin):
            return self._binary(node)
        if isinstance(node, Call):
            return self._call(node)
        raise TypeError(f"not an expression node: {node!r}")

    def _binary(self, node):
        op = node.op
        if op == "^":
            return self._power(node)
        a = self.eval(node.lhs)
        b = self.eval(node.rhs)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            _check(dual.primal(b) == 0, "division by zero")
            return a / b
        raise TypeError(f"unknown operator {op!r}")

    def _power(self, node):
        base = self.eval(node.lhs)
        n = _int_literal(node.rhs)
        if n is not None:
            if n < 0:
                _check(dual.primal(base) == 0, "zero base under a negative power")
            return dual.intpow(base, n)
        expo = self.eval(node.rhs)
        bp = dual.primal(base)
        if self.complex_mode:
            _check(bp == 0, "zero base under a general power")
        else:
            _check(np.real(bp) < 0,
                   "negative base under a fractional power in real mode")
            zero = np.asarray(np.real(bp) == 0)
            if np.any(zero):
                ep = np.real(dual.primal(expo))
                _check(zero & np.asarray(ep <= 0),
                       "zero base under a non-positive power")
                if isinstance(base, Dual) or isinstance(expo, Dual):
                    raise EvalError(
                        "cannot differentiate a fractional power at a zero base",
                        index=_bad_index(zero),
                    )
                return np.power(base, expo)  # 0^positive = 0, elementwise
        return dual.exp(expo * dual.log(base))

    def _call(self, node):
        arg = self.eval(node.arg)
        fn = node.fn
        ap = dual.primal(arg)
        if fn == "sin":
            return dual.sin(arg)
        if fn == "cos":
            return dual.cos(arg)
        if fn == "exp":
            return dual.exp(arg)
        if fn == "log":
            if self.complex_mode:
                _check(ap == 0, "log of zero")
            else:
                _check(np.real(ap) <= 0, "log of a non-positive value in real mode")
            return dual.log(arg)
        if fn == "sqrt":
            if not self.complex_mode:
                _check(np.real(ap) < 0, "sqrt of a negative value in real mode")
            return dual.sqrt(arg)
        if fn == "abs":
            if isinstance(arg, Dual) and _is_complex_binding(arg):
                raise EvalError("abs is not differentiable for complex values")
            return dual.absval(arg)
        raise UnknownFunctionError(f"unknown function {fn!r}", 1)


def evaluate(expr: LagrangianExpr, env: dict):
    """Evaluate ``expr`` with the given bindings.

    Returns a scalar (or an array when bindings are arrays); dtype follows
    the bindings.  Unbound free variables, division by zero and real-mode
    domain violations raise EvalError.
    """
    complex_mode = any(_is_complex_binding(v) for v in env.values())
    return _Evaluator(env, complex_mode).eval(expr.ast)


def _unit(value, active: bool):
    """A derivative seed (1 or 0) shaped like the binding's primal value."""
    p = dual.primal(value)
    if isinstance(p, np.ndarray):
        s = np.ones(p.shape) if active else np.zeros(p.shape)
        return s
    return 1.0 if active else 0.0


def _seed(value, active: bool):
    return Dual(value, _unit(value, active))


def partial(expr: LagrangianExpr, var: str, env: dict):
    """Exact first partial derivative of ``expr`` with respect to ``var``.

    Returns exactly 0.0 when ``var`` does not occur in the expression.
    """
    if var not in expr.free_vars:
        return 0.0
    complex_mode = any(_is_complex_binding(v) for v in env.values())
    dual_env = {name: _seed(v, name == var) for name, v in env.items()}
    result = _Evaluator(dual_env, complex_mode).eval(expr.ast)
    if isinstance(result, Dual):
        return result.dot
    return 0.0


def _part(x):
    return x.val if isinstance(x, Dual) else x


def _dot(x):
    return x.dot if isinstance(x, Dual) else 0.0


def second_partials(expr: LagrangianExpr, var_a: str, var_b: str, env: dict):
    """Nested-dual evaluation returning (value, dL/da, dL/db, d2L/dadb)."""
    complex_mode = any(_is_complex_binding(v) for v in env.values())
    nested = {}
    for name, v in env.items():
        inner = Dual(v, _unit(v, name == var_b))
        d_inner_da = Dual(_unit(v, name == var_a), _unit(v, False))
        nested[name] = Dual(inner, d_inner_da)
    result = _Evaluator(nested, complex_mode).eval(expr.ast)
    value = dual.primal(result)
    d_a = _part(_dot(result))
    d_b = _dot(_part(result))
    d_ab = _dot(_dot(result))
    return value, d_a, d_b, d_ab

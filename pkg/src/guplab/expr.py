"""Tiny rational-polynomial expression language for deformation functions.

Grammar (``^`` binds tighter than unary minus)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | power
    power  := atom ('^' uint)?
    atom   := number | ident | '(' expr ')'

The identifier ``p`` is the momentum variable; every other identifier is a
parameter bound at evaluation time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Optional, Union

import numpy as np
from numpy.polynomial import Polynomial

__all__ = [
    "Expr",
    "Num",
    "Var",
    "Param",
    "Neg",
    "BinOp",
    "Pow",
    "ParseError",
    "UnboundParameterError",
    "parse",
    "to_text",
    "evaluate",
    "derivative",
    "parameters",
    "to_polynomial",
    "is_polynomial",
    "reflect",
]

VARIABLE = "p"


class ParseError(ValueError):
    """Syntax error; ``offset`` is the 0-based character position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnboundParameterError(KeyError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


Expr = Union[Num, Var, Param, Neg, BinOp, Pow]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            stripped = len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[pos + stripped]!r}", pos + stripped)
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, value, offset = self.take()
        if kind != "op" or value != op:
            raise ParseError(f"expected {op!r}, found {value or 'end of input'!r}", offset)

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            kind, value, offset = self.take()
            if kind != "num" or not value.isdigit():
                raise ParseError("exponent must be an unsigned integer", offset)
            return Pow(base, int(value))
        return base

    def atom(self):
        kind, value, offset = self.take()
        if kind == "num":
            return Num(float(value))
        if kind == "ident":
            return Var() if value == VARIABLE else Param(value)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ParseError(f"unexpected {value or 'end of input'!r}", offset)


def parse(text: str) -> Expr:
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    parser = _Parser(text)
    node = parser.expr()
    kind, value, offset = parser.peek()
    if kind != "end":
        raise ParseError(f"unexpected {value!r}", offset)
    return node


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def to_text(node: Expr) -> str:
    """Print with just enough parentheses for :func:`parse` to rebuild ``node``."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return VARIABLE
    if isinstance(node, Param):
        return node.name
    if isinstance(node, Neg):
        inner = to_text(node.operand)
        if isinstance(node.operand, BinOp):
            inner = f"({inner})"
        return "-" + inner
    if isinstance(node, Pow):
        base = to_text(node.base)
        if not isinstance(node.base, (Var, Param)) and not (
            isinstance(node.base, Num) and node.base.value >= 0
        ):
            base = f"({base})"
        return f"{base}^{node.exponent}"
    left = to_text(node.left)
    right = to_text(node.right)
    prec = _PREC[node.op]
    if isinstance(node.left, BinOp) and _PREC[node.left.op] < prec:
        left = f"({left})"
    if isinstance(node.right, BinOp) and _PREC[node.right.op] <= prec:
        right = f"({right})"
    return f"{left} {node.op} {right}"


def parameters(node: Expr) -> set:
    if isinstance(node, Param):
        return {node.name}
    if isinstance(node, (Num, Var)):
        return set()
    if isinstance(node, Neg):
        return parameters(node.operand)
    if isinstance(node, Pow):
        return parameters(node.base)
    return parameters(node.left) | parameters(node.right)


def evaluate(node: Expr, p, params: Mapping[str, float]):
    """Evaluate on scalar or array ``p``.  Division by zero yields inf/nan."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return p
    if isinstance(node, Param):
        try:
            return params[node.name]
        except KeyError:
            raise UnboundParameterError(f"unbound parameter {node.name!r}") from None
    if isinstance(node, Neg):
        return -evaluate(node.operand, p, params)
    if isinstance(node, Pow):
        return evaluate(node.base, p, params) ** node.exponent
    a = evaluate(node.left, p, params)
    b = evaluate(node.right, p, params)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.divide(a, b)


ZERO, ONE = Num(0.0), Num(1.0)


def _is(node, value):
    return isinstance(node, Num) and node.value == value


def _add(a, b):
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    return BinOp("+", a, b)


def _sub(a, b):
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return Neg(b)
    return BinOp("-", a, b)


def _mul(a, b):
    if _is(a, 0.0) or _is(b, 0.0):
        return ZERO
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    return BinOp("*", a, b)


def _div(a, b):
    if _is(a, 0.0):
        return ZERO
    if _is(b, 1.0):
        return a
    return BinOp("/", a, b)


def _neg(a):
    if _is(a, 0.0):
        return ZERO
    return Neg(a)


def derivative(node: Expr) -> Expr:
    """Symbolic d/dp with light simplification of zeros and ones."""
    if isinstance(node, (Num, Param)):
        return ZERO
    if isinstance(node, Var):
        return ONE
    if isinstance(node, Neg):
        return _neg(derivative(node.operand))
    if isinstance(node, Pow):
        n = node.exponent
        if n == 0:
            return ZERO
        du = derivative(node.base)
        if n == 1:
            return du
        lower = node.base if n == 2 else Pow(node.base, n - 1)
        return _mul(_mul(Num(float(n)), lower), du)
    u, v = node.left, node.right
    du, dv = derivative(u), derivative(v)
    if node.op == "+":
        return _add(du, dv)
    if node.op == "-":
        return _sub(du, dv)
    if node.op == "*":
        return _add(_mul(du, v), _mul(u, dv))
    # quotient rule
    return _div(_sub(_mul(du, v), _mul(u, dv)), Pow(v, 2))


def to_polynomial(node: Expr, params: Mapping[str, float]) -> Optional[Polynomial]:
    """Coefficients in p when ``node`` is a polynomial in p, else ``None``."""
    if isinstance(node, Num):
        return Polynomial([node.value])
    if isinstance(node, Var):
        return Polynomial([0.0, 1.0])
    if isinstance(node, Param):
        return Polynomial([float(evaluate(node, 0.0, params))])
    if isinstance(node, Neg):
        inner = to_polynomial(node.operand, params)
        return None if inner is None else -inner
    if isinstance(node, Pow):
        base = to_polynomial(node.base, params)
        return None if base is None else base ** node.exponent
    left = to_polynomial(node.left, params)
    right = to_polynomial(node.right, params)
    if left is None or right is None:
        return None
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if right.degree() == 0 or np.all(right.coef[1:] == 0):
        c = right.coef[0]
        if c == 0:
            return None
        return left / c
    return None


def is_polynomial(node: Expr) -> bool:
    """Structural test, independent of parameter values."""
    if isinstance(node, (Num, Var, Param)):
        return True
    if isinstance(node, Neg):
        return is_polynomial(node.operand)
    if isinstance(node, Pow):
        return is_polynomial(node.base)
    if node.op == "/":
        return is_polynomial(node.left) and _is_p_free(node.right)
    return is_polynomial(node.left) and is_polynomial(node.right)


def _is_p_free(node: Expr) -> bool:
    if isinstance(node, Var):
        return False
    if isinstance(node, (Num, Param)):
        return True
    if isinstance(node, Neg):
        return _is_p_free(node.operand)
    if isinstance(node, Pow):
        return _is_p_free(node.base)
    return _is_p_free(node.left) and _is_p_free(node.right)


def reflect(node: Expr) -> Expr:
    """Tree for ``f(-p)``."""
    if isinstance(node, Var):
        return Neg(Var())
    if isinstance(node, (Num, Param)):
        return node
    if isinstance(node, Neg):
        return Neg(reflect(node.operand))
    if isinstance(node, Pow):
        return Pow(reflect(node.base), node.exponent)
    return BinOp(node.op, reflect(node.left), reflect(node.right))

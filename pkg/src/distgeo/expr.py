"""Scalar expressions over a coordinate chart.

Grammar (``^`` binds tightest and is right-associative; unary minus binds
looser than ``^`` so ``-x^2`` is ``-(x^2)``)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" unary)?
    atom    := NUMBER | NAME | FUNC "(" expr ")" | "(" expr ")"
    NUMBER  := digits ["." digits] [("e" | "E") ["+" | "-"] digits]
    FUNC    := sin | cos | tan | exp | log | sqrt | sinh | cosh | tanh

Names must be chart coordinates. Evaluation is generic: pass floats for plain
values or :class:`~distgeo.jet.Jet` coordinates for exact derivatives.
"""

import re
from dataclasses import dataclass, field

import numpy as np

from . import jet as J
from .errors import (EvalDomainError, ExprSyntaxError, InputError,
                     UnknownFunctionError, UnknownIdentifierError)

__all__ = ["Expr", "Const", "Coord", "Unary", "Binary", "parse", "evaluate",
           "to_text", "FUNCTIONS"]

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh")

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)


class Expr:
    """Base class of the immutable expression tree."""

    __slots__ = ()

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Const(Expr):
    value: float
    pos: int = field(default=0, compare=False)

    def eval(self, point):
        return self.value


@dataclass(frozen=True)
class Coord(Expr):
    index: int
    name: str
    pos: int = field(default=0, compare=False)

    def eval(self, point):
        return point[self.index]


def _values(x):
    return np.asarray(J.value_of(x), dtype=float)


_UNARY = {
    "neg": lambda x: -x,
    "sin": J.sin, "cos": J.cos, "tan": J.tan, "exp": J.exp,
    "sinh": J.sinh, "cosh": J.cosh, "tanh": J.tanh,
    "log": J.log, "sqrt": J.sqrt,
}


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    arg: Expr
    pos: int = field(default=0, compare=False)

    def eval(self, point):
        x = self.arg.eval(point)
        if self.op == "log" and np.any(_values(x) <= 0.0):
            raise EvalDomainError("log of non-positive value", self.pos)
        if self.op == "sqrt":
            v = _values(x)
            if np.any(v < 0.0):
                raise EvalDomainError("sqrt of negative value", self.pos)
            if J.order_of(x) >= 1 and J.order_of(x) < J._INF and np.any(v == 0.0):
                raise EvalDomainError("sqrt is not differentiable at 0", self.pos)
        if self.op == "tan" and np.any(np.cos(_values(x)) == 0.0):
            raise EvalDomainError("tan at a pole", self.pos)
        return _UNARY[self.op](x)


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    pos: int = field(default=0, compare=False)

    def eval(self, point):
        a = self.left.eval(point)
        b = self.right.eval(point)
        op = self.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if np.any(_values(b) == 0.0):
                raise EvalDomainError("division by zero", self.pos)
            return a / b
        return _pow(a, b, self.pos)


def _pow(a, b, pos):
    base = _values(a)
    expo = _values(b)
    constant_expo = not isinstance(b, J.Jet) or not (
        np.any(b.first) or (b.second is not None and np.any(b.second)))
    integral = constant_expo and np.all(expo == np.round(expo))
    if integral:
        if np.any((base == 0.0) & (expo < 0)):
            raise EvalDomainError("zero raised to a negative power", pos)
    elif np.any(base <= 0.0):
        raise EvalDomainError("non-integer power of a non-positive base", pos)
    if not isinstance(a, J.Jet) and not isinstance(b, J.Jet):
        return a ** b
    return J.power(a, b)


# -- parsing ------------------------------------------------------------------

def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, chart):
        self.text = text
        self.chart = {name: i for i, name in enumerate(chart)}
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected, tok=None):
        kind, text, pos = tok or self.peek()
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"expected {expected}, found {found}", pos, self.text)

    def expect(self, symbol):
        tok = self.peek()
        if tok[0] != "op" or tok[1] != symbol:
            self.fail(repr(symbol))
        return self.take()

    def parse(self):
        e = self.expr()
        if self.peek()[0] != "end":
            self.fail("operator or end of input")
        return e

    def expr(self):
        left = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            _, op, pos = self.take()
            left = Binary(op, left, self.term(), pos)
        return left

    def term(self):
        left = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            _, op, pos = self.take()
            left = Binary(op, left, self.unary(), pos)
        return left

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return Unary("neg", self.unary(), tok[2])
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.take()
            return Binary("^", base, self.unary(), tok[2])
        return base

    def atom(self):
        tok = self.peek()
        kind, text, pos = tok
        if kind == "num":
            self.take()
            return Const(float(text), pos)
        if kind == "name":
            self.take()
            nxt = self.peek()
            if nxt[0] == "op" and nxt[1] == "(":
                if text not in FUNCTIONS:
                    raise UnknownFunctionError(f"unknown function {text!r}", pos, self.text)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Unary(text, arg, pos)
            if text in self.chart:
                return Coord(self.chart[text], text, pos)
            if text in FUNCTIONS:
                self.fail("'(' after function name")
            raise UnknownIdentifierError(f"unknown identifier {text!r}", pos, self.text)
        if kind == "op" and text == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        self.fail("number, name or '('")


def _check_chart(chart):
    seen = set()
    for name in chart:
        if not isinstance(name, str) or not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", name):
            raise InputError(f"invalid coordinate name {name!r}")
        if name in FUNCTIONS:
            raise InputError(f"coordinate name {name!r} shadows a function")
        if name in seen:
            raise InputError(f"duplicate coordinate name {name!r}")
        seen.add(name)


def parse(text, chart):
    """Parse ``text`` into an :class:`Expr` whose names index into ``chart``."""
    chart = list(chart)
    _check_chart(chart)
    if isinstance(text, (int, float)):
        text = repr(float(text))
    return _Parser(str(text), chart).parse()


def evaluate(e, point):
    """Evaluate ``e`` at ``point`` (a sequence of floats or jets).

    Returns a float for float input, otherwise a scalar jet whose order is
    that of the coordinates.
    """
    return e.eval(point)


# -- printing -----------------------------------------------------------------

def to_text(e):
    """Fully parenthesised text that parses back to an equal tree."""
    if isinstance(e, Const):
        return repr(float(e.value))
    if isinstance(e, Coord):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            return f"(-{to_text(e.arg)})"
        return f"{e.op}({to_text(e.arg)})"
    if isinstance(e, Binary):
        return f"({to_text(e.left)} {e.op} {to_text(e.right)})"
    raise TypeError(f"not an expression: {e!r}")


def max_index(e):
    if isinstance(e, Coord):
        return e.index
    if isinstance(e, Unary):
        return max_index(e.arg)
    if isinstance(e, Binary):
        return max(max_index(e.left), max_index(e.right))
    return -1

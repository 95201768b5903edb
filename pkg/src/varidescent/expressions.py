"""A small analytic-expression language for configs and built-in problems.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-'? power
    power  := atom ('^' factor)?
    atom   := number | ident | ident '(' expr ')' | '(' expr ')'

Identifiers are the coordinates ``x1 .. xn``, the constant ``pi`` and the
functions ``sin cos exp log abs``.  Expressions evaluate on numpy arrays and
can be differentiated symbolically with respect to a coordinate.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "log": np.log,
    "abs": np.abs,
}

_VARIABLE = re.compile(r"x([1-9][0-9]*)$")
_TOKEN = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


class ExpressionError(ValueError):
    """Base class for expression parsing and evaluation failures."""


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class UnknownIdentifierError(ExpressionError):
    def __init__(self, name: str, position: int | None = None):
        where = "" if position is None else f" at offset {position}"
        super().__init__(f"unknown identifier {name!r}{where}")
        self.name = name
        self.position = position


class Expr:
    """Base node; subclasses are frozen dataclasses and compare structurally."""

    def evaluate(self, coords: Sequence[np.ndarray]):
        raise NotImplementedError

    def diff(self, k: int) -> Expr:
        """Derivative with respect to ``x_{k+1}`` (0-based axis ``k``)."""
        raise NotImplementedError

    def variables(self) -> set[int]:
        return set()

    def check_variables(self, n: int) -> None:
        for k in sorted(self.variables()):
            if k >= n:
                raise UnknownIdentifierError(f"x{k + 1}")

    def __str__(self) -> str:
        return self.to_source()

    def __call__(self, *point: float) -> float:
        return float(self.evaluate([np.asarray(p, dtype=float) for p in point]))


@dataclass(frozen=True)
class Num(Expr):
    value: float

    def evaluate(self, coords):
        return self.value

    def diff(self, k):
        return Num(0.0)

    def to_source(self):
        if math.copysign(1.0, self.value) < 0:
            return f"(-{-float(self.value)!r})"
        return repr(float(self.value))


@dataclass(frozen=True)
class Pi(Expr):
    def evaluate(self, coords):
        return math.pi

    def diff(self, k):
        return Num(0.0)

    def to_source(self):
        return "pi"


@dataclass(frozen=True)
class Var(Expr):
    index: int  # 0-based axis

    def evaluate(self, coords):
        if self.index >= len(coords):
            raise UnknownIdentifierError(f"x{self.index + 1}")
        return coords[self.index]

    def diff(self, k):
        return Num(1.0 if k == self.index else 0.0)

    def variables(self):
        return {self.index}

    def to_source(self):
        return f"x{self.index + 1}"


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr

    def evaluate(self, coords):
        return -self.operand.evaluate(coords)

    def diff(self, k):
        return _neg(self.operand.diff(k))

    def variables(self):
        return self.operand.variables()

    def to_source(self):
        return f"(-{self.operand.to_source()})"


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def evaluate(self, coords):
        a = self.left.evaluate(coords)
        b = self.right.evaluate(coords)
        with np.errstate(all="ignore"):
            if self.op == "+":
                return a + b
            if self.op == "-":
                return a - b
            if self.op == "*":
                return a * b
            if self.op == "/":
                return np.divide(a, b)
            return np.power(a, b)

    def diff(self, k):
        a, b = self.left, self.right
        da, db = a.diff(k), b.diff(k)
        if self.op == "+":
            return _add(da, db)
        if self.op == "-":
            return _sub(da, db)
        if self.op == "*":
            return _add(_mul(da, b), _mul(a, db))
        if self.op == "/":
            return _div(_sub(_mul(da, b), _mul(a, db)), _pow(b, Num(2.0)))
        if isinstance(db, Num) and db.value == 0.0:
            # power rule for exponents constant in x_k
            return _mul(_mul(b, _pow(a, _sub(b, Num(1.0)))), da)
        # a^b = exp(b log a)
        return _mul(self, _add(_mul(db, Call("log", a)), _mul(b, _div(da, a))))

    def variables(self):
        return self.left.variables() | self.right.variables()

    def to_source(self):
        return f"({self.left.to_source()} {self.op} {self.right.to_source()})"


@dataclass(frozen=True)
class Call(Expr):
    name: str
    arg: Expr

    def evaluate(self, coords):
        with np.errstate(all="ignore"):
            return FUNCTIONS[self.name](self.arg.evaluate(coords))

    def diff(self, k):
        a = self.arg
        da = a.diff(k)
        if self.name == "sin":
            outer = Call("cos", a)
        elif self.name == "cos":
            outer = _neg(Call("sin", a))
        elif self.name == "exp":
            outer = self
        elif self.name == "log":
            return _div(da, a)
        else:
            # d|a| = a/|a| da, undefined at a = 0
            outer = _div(a, self)
        return _mul(outer, da)

    def variables(self):
        return self.arg.variables()

    def to_source(self):
        return f"{self.name}({self.arg.to_source()})"


def _is_num(e: Expr, value: float) -> bool:
    return isinstance(e, Num) and e.value == value


def _add(a, b):
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    return BinOp("+", a, b)


def _sub(a, b):
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return _neg(b)
    return BinOp("-", a, b)


def _mul(a, b):
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return Num(0.0)
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    return BinOp("*", a, b)


def _div(a, b):
    if _is_num(a, 0.0):
        return Num(0.0)
    if _is_num(b, 1.0):
        return a
    return BinOp("/", a, b)


def _pow(a, b):
    if _is_num(b, 1.0):
        return a
    return BinOp("^", a, b)


def _neg(a):
    if isinstance(a, Num):
        return Num(-a.value)
    return Neg(a)


class _Parser:
    def __init__(self, source: str, n: int | None):
        self.source = source
        self.n = n
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(source):
            if source[pos:].strip() == "":
                break
            m = _TOKEN.match(source, pos)
            if m is None:
                bad = pos + len(source[pos:]) - len(source[pos:].lstrip())
                raise ExpressionSyntaxError(
                    f"unexpected character {source[bad]!r}", bad
                )
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.i = 0

    def peek(self):
        if self.i < len(self.tokens):
            return self.tokens[self.i]
        return ("end", "", len(self.source))

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, text: str):
        kind, value, pos = self.take()
        if value != text or kind != "op":
            what = "end of input" if kind == "end" else repr(value)
            raise ExpressionSyntaxError(f"expected {text!r}, found {what}", pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected {value!r}", pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.factor())
        return e

    def factor(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.power())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.factor())
        return base

    def atom(self):
        kind, value, pos = self.take()
        if kind == "number":
            return Num(float(value))
        if kind == "ident":
            if value in FUNCTIONS:
                if self.peek()[:2] != ("op", "("):
                    raise ExpressionSyntaxError(
                        f"function {value!r} needs an argument", self.peek()[2]
                    )
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(value, arg)
            if value == "pi":
                return Pi()
            m = _VARIABLE.match(value)
            if m is None:
                raise UnknownIdentifierError(value, pos)
            k = int(m.group(1)) - 1
            if self.n is not None and k >= self.n:
                raise UnknownIdentifierError(value, pos)
            return Var(k)
        if kind == "op" and value == "(":
            e = self.expr()
            self.expect(")")
            return e
        what = "end of input" if kind == "end" else repr(value)
        raise ExpressionSyntaxError(f"unexpected {what}", pos)


def parse_expression(source: str, n: int | None = None) -> Expr:
    """Parse ``source``; with ``n`` given, only ``x1 .. xn`` are accepted."""
    if not isinstance(source, str) or not source.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    return _Parser(source, n).parse()


def as_expression(value, n: int | None = None) -> Expr:
    """Coerce text, numbers, or existing nodes to an expression."""
    if isinstance(value, Expr):
        if n is not None:
            value.check_variables(n)
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return Num(float(value))
    return parse_expression(value, n)


def gradient(expr: Expr, n: int) -> tuple[Expr, ...]:
    return tuple(expr.diff(k) for k in range(n))

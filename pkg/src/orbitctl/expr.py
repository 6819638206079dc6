"""Scalar fields on R^n written in a small expression language.

Grammar (loosest to tightest binding)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right associative, integer exponent
    atom   := number | name | name '(' expr ')' | '(' expr ')'

Variables are ``x1 .. xn``; for ``n <= 3`` the aliases ``x, y, z`` may be used.
Functions: ``sin cos exp sqrt tanh``.

Fields compile to closures that are generic over floats and :class:`Dual`
numbers, so gradients are exact forward-mode derivatives.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import dual
from .dual import Dual, EvaluationError

__all__ = [
    "ParseError",
    "EvaluationError",
    "ScalarField",
    "parse",
    "constant",
    "evaluate",
    "gradient",
    "value_and_gradient",
]

ALIASES = ("x", "y", "z")


class ParseError(ValueError):
    """Malformed expression text; ``position`` is a 0-based character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


# --- AST -----------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 0-based


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


@dataclass(frozen=True)
class Call:
    name: str
    arg: object


def _format(node) -> str:
    if isinstance(node, Num):
        text = repr(float(node.value))
        return f"({text})" if node.value < 0 else text
    if isinstance(node, Var):
        return f"x{node.index + 1}"
    if isinstance(node, Neg):
        return f"(-{_format(node.arg)})"
    if isinstance(node, BinOp):
        return f"({_format(node.left)}{node.op}{_format(node.right)})"
    if isinstance(node, Pow):
        exp_text = str(node.exponent) if node.exponent >= 0 else f"({node.exponent})"
        return f"({_format(node.base)}^{exp_text})"
    if isinstance(node, Call):
        return f"{node.name}({_format(node.arg)})"
    raise TypeError(f"unknown node {node!r}")


def _uses_variables(node) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, Num):
        return False
    if isinstance(node, (Neg, Call)):
        return _uses_variables(node.arg)
    if isinstance(node, Pow):
        return _uses_variables(node.base)
    return _uses_variables(node.left) or _uses_variables(node.right)


# --- compilation ---------------------------------------------------------

def _ipow(base, n: int):
    if isinstance(base, Dual):
        return base ** n
    try:
        return base ** n
    except ZeroDivisionError:
        raise EvaluationError("division by zero in negative power") from None


def _div(a, b):
    if not isinstance(a, Dual) and not isinstance(b, Dual):
        if b == 0.0:
            raise EvaluationError("division by zero")
        return a / b
    return a / b


def _compile(node) -> Callable:
    if isinstance(node, Num):
        v = float(node.value)
        return lambda p: v
    if isinstance(node, Var):
        i = node.index
        return lambda p: p[i]
    if isinstance(node, Neg):
        f = _compile(node.arg)
        return lambda p: -f(p)
    if isinstance(node, Pow):
        f = _compile(node.base)
        n = node.exponent
        if n == 2:
            def square(p):
                b = f(p)
                return b * b
            return square
        return lambda p: _ipow(f(p), n)
    if isinstance(node, Call):
        f = _compile(node.arg)
        fn = dual.FUNCTIONS[node.name]
        return lambda p: fn(f(p))
    left, right = _compile(node.left), _compile(node.right)
    if node.op == "+":
        return lambda p: left(p) + right(p)
    if node.op == "-":
        return lambda p: left(p) - right(p)
    if node.op == "*":
        return lambda p: left(p) * right(p)
    return lambda p: _div(left(p), right(p))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A parsed scalar field of ``arity`` variables."""

    arity: int
    ast: object
    _fn: Callable = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_fn", _compile(self.ast))

    def __call__(self, point: Sequence):
        """Evaluate at ``point``; works for floats and dual numbers alike."""
        if len(point) != self.arity:
            raise ValueError(f"expected a point of dimension {self.arity}, got {len(point)}")
        try:
            value = self._fn(point)
        except (ZeroDivisionError, OverflowError, ValueError) as exc:
            raise EvaluationError(str(exc)) from None
        if not isinstance(value, Dual) and not math.isfinite(value):
            raise EvaluationError(f"non-finite value {value!r}")
        return value

    def __str__(self):
        return _format(self.ast)

    @property
    def is_constant(self) -> bool:
        return not _uses_variables(self.ast)


# --- tokenizer / parser ---------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, arity: int):
        self.tokens = _tokenize(text)
        self.i = 0
        self.arity = arity

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        tok = self.take()
        if tok[1] != value:
            found = tok[1] or "end of input"
            raise ParseError(f"expected {value!r}, found {found!r}", tok[2])

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected token {tok[1]!r}", tok[2])
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return Neg(self.unary())
        if self.peek()[1] == "+" and self.peek()[0] == "op":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            pos = self.peek()[2]
            exponent = self.unary()
            return Pow(base, self._integer_exponent(exponent, pos))
        return base

    def _integer_exponent(self, node, pos) -> int:
        if _uses_variables(node):
            raise ParseError("exponent must be an integer constant", pos)
        value = _compile(node)(())
        if not float(value).is_integer():
            raise ParseError("exponent must be an integer constant", pos)
        return int(value)

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if self.peek()[1] == "(":
                if text not in dual.FUNCTIONS:
                    raise ParseError(f"unknown function {text!r}", pos)
                self.take()
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != 1:
                    raise ParseError(f"{text} takes 1 argument, got {len(args)}", pos)
                return Call(text, args[0])
            return Var(self._variable(text, pos))
        if text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = text or "end of input"
        raise ParseError(f"unexpected {found!r}", pos)

    def _variable(self, name: str, pos: int) -> int:
        if name in dual.FUNCTIONS:
            raise ParseError(f"function {name!r} used without arguments", pos)
        m = re.fullmatch(r"x(\d+)", name)
        if m:
            index = int(m.group(1))
            if 1 <= index <= self.arity:
                return index - 1
            raise ParseError(f"variable {name!r} out of range for arity {self.arity}", pos)
        if name in ALIASES and self.arity <= 3 and ALIASES.index(name) < self.arity:
            return ALIASES.index(name)
        raise ParseError(f"unknown variable {name!r}", pos)


def parse(text: str, arity: int) -> ScalarField:
    if arity < 1:
        raise ValueError("arity must be positive")
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    return ScalarField(arity, _Parser(text, arity).parse())


def constant(value: float, arity: int) -> ScalarField:
    return ScalarField(arity, Num(float(value)))


def evaluate(f: ScalarField, point: Sequence[float]) -> float:
    return f(point)


def value_and_gradient(f: ScalarField, point: Sequence):
    """Value and gradient of ``f``; one dual pass per coordinate.

    ``point`` may itself hold dual numbers, in which case the result is
    differentiable with respect to those outer perturbations.
    """
    n = len(point)
    tag = dual.new_tag()
    grad = []
    value = None
    for j in range(n):
        seeded = [Dual(p, 1.0 if m == j else 0.0, tag) for m, p in enumerate(point)]
        r = f(seeded)
        grad.append(dual.derivative_at(r, tag))
        if value is None:
            value = dual.value_at(r, tag)
    return value, grad


def gradient(f: ScalarField, point: Sequence) -> list:
    return value_and_gradient(f, point)[1]

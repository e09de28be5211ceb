"""Expression language for frame fields and chart maps.

Grammar (``^`` binds tightest and is right-associative, then unary minus, then
``* /``, then ``+ -``)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := primary ("^" unary)?
    primary := NUMBER | VAR | FUNC "(" expr ("," expr)* ")" | "(" expr ")"
    VAR     := ("x" | "y") DIGITS          # 1-based, at most n
    FUNC    := sqrt | exp | log | sin | cos | abs | pow

Expressions evaluate either on floats or on jets (see :mod:`fptensor.jets`).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import jets
from .errors import DomainError, FPError, ParseError
from .jets import EvalPoint, JetArray


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str  # "x" or "y"
    index: int  # 1-based


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Expr = Union[Num, Var, Neg, BinOp, Call]

FUNCTIONS = {"sqrt": 1, "exp": 1, "log": 1, "sin": 1, "cos": 1, "abs": 1, "pow": 2}

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos), text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), _byte_offset(text, pos)))
        pos = m.end()
    tokens.append(("end", "", _byte_offset(text, len(text))))
    return tokens


class _Parser:
    def __init__(self, text: str, n: int):
        self.text = text
        self.n = n
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, off = self.advance()
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", off, self.text)

    def parse(self) -> Expr:
        expr = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {text!r}", off, self.text)
        return expr

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def primary(self) -> Expr:
        kind, text, off = self.advance()
        if kind == "num":
            value = float(text)
            if not math.isfinite(value):
                raise ParseError(f"numeric literal {text!r} is not finite", off, self.text)
            return Num(value)
        if kind == "name":
            m = re.fullmatch(r"([xy])(\d+)", text)
            if m:
                index = int(m.group(2))
                if index < 1 or index > self.n:
                    raise ParseError(
                        f"variable index out of range: {text} (n = {self.n})", off, self.text
                    )
                return Var(m.group(1), index)
            if text in FUNCTIONS:
                self.expect("(")
                args = [self.expr()]
                while self.peek()[1] == "," and self.peek()[0] == "op":
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[text]:
                    raise ParseError(
                        f"{text} takes {FUNCTIONS[text]} argument(s), got {len(args)}", off, self.text
                    )
                return Call(text, tuple(args))
            raise ParseError(f"unknown identifier {text!r}", off, self.text)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"unexpected {found}", off, self.text)


def parse_expression(text: str, n: int) -> Expr:
    """Parse ``text`` into an AST whose variables are bound for dimension ``n``."""
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty expression", 0, text if isinstance(text, str) else None)
    return _Parser(text, n).parse()


# ---------------------------------------------------------------------------
# inspection and printing
# ---------------------------------------------------------------------------

def to_string(expr: Expr) -> str:
    """Unambiguous text form; ``parse_expression(to_string(e))`` rebuilds ``e``."""
    if isinstance(expr, Num):
        return repr(float(expr.value))
    if isinstance(expr, Var):
        return f"{expr.kind}{expr.index}"
    if isinstance(expr, Neg):
        # always parenthesized: a bare "-a" as the base of "^" would re-parse as -(a ^ b)
        return f"(-{to_string(expr.operand)})"
    if isinstance(expr, BinOp):
        return f"({to_string(expr.left)} {expr.op} {to_string(expr.right)})"
    if isinstance(expr, Call):
        return f"{expr.name}({', '.join(to_string(a) for a in expr.args)})"
    raise TypeError(f"not an expression node: {expr!r}")


def walk(expr: Expr):
    yield expr
    if isinstance(expr, Neg):
        yield from walk(expr.operand)
    elif isinstance(expr, BinOp):
        yield from walk(expr.left)
        yield from walk(expr.right)
    elif isinstance(expr, Call):
        for a in expr.args:
            yield from walk(a)


def variables(expr: Expr) -> set[tuple[str, int]]:
    return {(e.kind, e.index) for e in walk(expr) if isinstance(e, Var)}


def is_constant(expr: Expr) -> bool:
    return not variables(expr)


def uses_abs(expr: Expr) -> bool:
    return any(isinstance(e, Call) and e.name == "abs" for e in walk(expr))


def max_index(expr: Expr) -> int:
    return max((i for _, i in variables(expr)), default=0)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _float_call(name: str, args: list[float]) -> float:
    a = args[0]
    if name == "sqrt":
        if a < 0:
            raise FPError("sqrt of a negative value")
        return math.sqrt(a)
    if name == "exp":
        return math.exp(a)
    if name == "log":
        if a <= 0:
            raise FPError("log of a non-positive value")
        return math.log(a)
    if name == "sin":
        return math.sin(a)
    if name == "cos":
        return math.cos(a)
    if name == "abs":
        return abs(a)
    if name == "pow":
        return _float_pow(a, args[1])
    raise FPError(f"unknown function {name}")


def _float_pow(a: float, b: float) -> float:
    if a < 0 and not float(b).is_integer():
        raise FPError(f"non-integer power {b} of a negative value")
    if a == 0 and b < 0:
        raise FPError("division by zero")
    return math.pow(a, b)


_JET_FUNCS = {
    "sqrt": jets.sqrt,
    "exp": jets.exp,
    "log": jets.log,
    "sin": jets.sin,
    "cos": jets.cos,
    "abs": jets.fabs,
}


def _jet_pow(base, exponent_node: Expr, exponent):
    if isinstance(base, JetArray):
        if is_constant(exponent_node) or not isinstance(exponent, JetArray):
            p = float(exponent.value) if isinstance(exponent, JetArray) else float(exponent)
            return jets.power(base, p)
        return jets.exp(exponent * jets.log(base))
    if isinstance(exponent, JetArray):
        if base <= 0:
            raise FPError("power with a non-positive base and variable exponent")
        return jets.exp(exponent * math.log(base))
    return _float_pow(base, exponent)


def _eval(expr: Expr, seeds: Sequence, n: int):
    try:
        if isinstance(expr, Num):
            return expr.value
        if isinstance(expr, Var):
            if expr.index > n:
                raise FPError(f"variable {expr.kind}{expr.index} not bound for n = {n}")
            return seeds[expr.index - 1 if expr.kind == "x" else n + expr.index - 1]
        if isinstance(expr, Neg):
            return -_eval(expr.operand, seeds, n)
        if isinstance(expr, BinOp):
            a = _eval(expr.left, seeds, n)
            b = _eval(expr.right, seeds, n)
            if expr.op == "+":
                return a + b
            if expr.op == "-":
                return a - b
            if expr.op == "*":
                return a * b
            if expr.op == "/":
                denom = float(b.value) if isinstance(b, JetArray) else b
                if denom == 0:
                    raise FPError("division by zero")
                return a / b
            if expr.op == "^":
                return _jet_pow(a, expr.right, b)
            raise FPError(f"unknown operator {expr.op}")
        if isinstance(expr, Call):
            args = [_eval(a, seeds, n) for a in expr.args]
            if expr.name == "pow":
                return _jet_pow(args[0], expr.args[1], args[1])
            if isinstance(args[0], JetArray):
                return _JET_FUNCS[expr.name](args[0])
            return _float_call(expr.name, args)
    except DomainError:
        raise
    except (FPError, ZeroDivisionError, OverflowError, ValueError) as exc:
        raise DomainError(str(exc), to_string(expr)) from None
    raise TypeError(f"not an expression node: {expr!r}")


def evaluate_on(expr: Expr, seeds: Sequence):
    """Evaluate with arbitrary seeds (floats or jets) for ``x1..xn, y1..yn``."""
    if len(seeds) % 2:
        raise ValueError("seeds must hold x and y coordinates (even length)")
    return _eval(expr, seeds, len(seeds) // 2)


def evaluate(expr: Expr, point: EvalPoint, order: int) -> JetArray:
    """Jet of ``expr`` at ``point`` to the given order."""
    seeds = jets.jet_lift(point, order)
    out = evaluate_on(expr, seeds)
    return jets.as_jet(out, 2 * point.n, order)


def evaluate_float(expr: Expr, x: Sequence[float], y: Sequence[float]) -> float:
    return float(evaluate_on(expr, list(x) + list(y)))


def as_function(expr: Expr):
    """Plain ``f(x, y) -> float`` for use with the finite-difference oracle."""
    return lambda x, y: evaluate_float(expr, np.asarray(x), np.asarray(y))

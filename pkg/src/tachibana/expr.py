"""Scalar expression trees over chart coordinates x1..xn.

Expressions support exact symbolic differentiation and vectorized
evaluation; every derivative taken anywhere in the library comes from
here, never from finite differences.  The only rewriting performed is
constant folding at construction time: correctness is defined by
evaluation, not by canonical form.

Grammar accepted by :func:`parse`::

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := base ("^" integer)?
    base   := number | "pi" | ident | "(" expr ")" | func "(" expr ")" | "-" base
    func   := "sin" | "cos" | "exp" | "sqrt" | "log"
    ident  := "x" digit+

Numbers are decimal literals with optional fraction and exponent.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Expr", "Num", "Var", "Add", "Sub", "Mul", "Div", "Pow", "Neg", "Func",
    "ParseError", "EvalDomainError", "PI",
    "num", "var", "add", "sub", "mul", "div", "powi", "neg",
    "sin", "cos", "exp", "sqrt", "log",
    "parse", "to_text", "differentiate", "evaluate", "evaluate_on",
]

_FUNC_NAMES = ("sin", "cos", "exp", "sqrt", "log")


class ParseError(ValueError):
    """Malformed expression text; carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvalDomainError(ArithmeticError):
    """Evaluation left the expression's domain (x/0, sqrt(<0), log(<=0))."""

    def __init__(self, message: str, subterm: "Expr"):
        super().__init__(f"{message} in subterm '{to_text(subterm)}'")
        self.subterm = subterm


@dataclass(frozen=True)
class Expr:
    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    index: int  # 1-based coordinate index


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int  # constant integer exponent only


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class Func(Expr):
    name: str
    argument: Expr


PI = Num(math.pi)


# ---------------------------------------------------------------------------
# smart constructors (constant folding + identity elimination)

def num(v: float) -> Num:
    return Num(float(v))


def var(i: int) -> Var:
    if i < 1:
        raise ValueError(f"coordinate index must be >= 1, got {i}")
    return Var(int(i))


def _is_zero(e: Expr) -> bool:
    return isinstance(e, Num) and e.value == 0.0


def _is_one(e: Expr) -> bool:
    return isinstance(e, Num) and e.value == 1.0


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if _is_zero(b):
        return a
    if _is_zero(a):
        return neg(b)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    if _is_zero(a) or _is_zero(b):
        return Num(0.0)
    if _is_one(a):
        return b
    if _is_one(b):
        return a
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_zero(a):
        return Num(0.0)
    if _is_one(b):
        return a
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0.0:
        return Num(a.value / b.value)
    return Div(a, b)


def powi(base: Expr, k: int) -> Expr:
    k = int(k)
    if k == 0:
        return Num(1.0)
    if k == 1:
        return base
    if isinstance(base, Num):
        try:
            return Num(float(base.value ** k))
        except (OverflowError, ZeroDivisionError):
            pass
    return Pow(base, k)


def neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def _make_func(name: str, folder):
    def build(argument: Expr) -> Expr:
        if isinstance(argument, Num):
            try:
                return Num(folder(argument.value))
            except (ValueError, OverflowError):
                pass  # out-of-domain constant: leave the node, error at eval
        return Func(name, argument)

    build.__name__ = name
    return build


sin = _make_func("sin", math.sin)
cos = _make_func("cos", math.cos)
exp = _make_func("exp", math.exp)
sqrt = _make_func("sqrt", math.sqrt)
log = _make_func("log", math.log)

_FUNC_BUILDERS = {"sin": sin, "cos": cos, "exp": exp, "sqrt": sqrt, "log": log}


# ---------------------------------------------------------------------------
# differentiation

def differentiate(e: Expr, i: int) -> Expr:
    """Exact partial derivative of ``e`` with respect to coordinate x_i."""
    if i < 1:
        raise ValueError(f"coordinate index must be >= 1, got {i}")
    if isinstance(e, Num):
        return Num(0.0)
    if isinstance(e, Var):
        return Num(1.0 if e.index == i else 0.0)
    if isinstance(e, Add):
        return add(differentiate(e.left, i), differentiate(e.right, i))
    if isinstance(e, Sub):
        return sub(differentiate(e.left, i), differentiate(e.right, i))
    if isinstance(e, Mul):
        return add(mul(differentiate(e.left, i), e.right),
                   mul(e.left, differentiate(e.right, i)))
    if isinstance(e, Div):
        numerator = sub(mul(differentiate(e.left, i), e.right),
                        mul(e.left, differentiate(e.right, i)))
        return div(numerator, powi(e.right, 2))
    if isinstance(e, Pow):
        chain = differentiate(e.base, i)
        return mul(mul(num(e.exponent), powi(e.base, e.exponent - 1)), chain)
    if isinstance(e, Neg):
        return neg(differentiate(e.operand, i))
    if isinstance(e, Func):
        u = e.argument
        du = differentiate(u, i)
        if e.name == "sin":
            return mul(cos(u), du)
        if e.name == "cos":
            return neg(mul(sin(u), du))
        if e.name == "exp":
            return mul(e, du)
        if e.name == "sqrt":
            return div(du, mul(num(2.0), e))
        if e.name == "log":
            return div(du, u)
    raise TypeError(f"cannot differentiate node of type {type(e).__name__}")


# ---------------------------------------------------------------------------
# evaluation (iterative post-order with per-call memo; vectorized over points)

def _children(e: Expr):
    if isinstance(e, (Add, Sub, Mul, Div)):
        return (e.left, e.right)
    if isinstance(e, Pow):
        return (e.base,)
    if isinstance(e, Neg):
        return (e.operand,)
    if isinstance(e, Func):
        return (e.argument,)
    return ()


def evaluate_on(e: Expr, coords) -> np.ndarray:
    """Evaluate ``e`` at many points at once.

    ``coords`` has shape (npoints, n); returns an array of shape (npoints,).
    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2:
        raise ValueError("coords must have shape (npoints, n)")
    npts, n = coords.shape
    memo: dict[int, np.ndarray] = {}
    stack = [e]
    while stack:
        node = stack[-1]
        nid = id(node)
        if nid in memo:
            stack.pop()
            continue
        kids = _children(node)
        pending = [k for k in kids if id(k) not in memo]
        if pending:
            stack.extend(pending)
            continue
        stack.pop()
        vals = [memo[id(k)] for k in kids]
        memo[nid] = _apply(node, vals, coords, npts, n)
    return memo[id(e)]


def evaluate(e: Expr, point) -> float:
    """Evaluate ``e`` at a single point (sequence of coordinates)."""
    return float(evaluate_on(e, np.asarray(point, dtype=float)[None, :])[0])


def _apply(node, vals, coords, npts, n):
    if isinstance(node, Num):
        return np.full(npts, node.value)
    if isinstance(node, Var):
        if node.index > n:
            raise ValueError(
                f"variable index out of range: x{node.index} with n={n}")
        return coords[:, node.index - 1]
    if isinstance(node, Add):
        return vals[0] + vals[1]
    if isinstance(node, Sub):
        return vals[0] - vals[1]
    if isinstance(node, Mul):
        return vals[0] * vals[1]
    if isinstance(node, Div):
        if np.any(vals[1] == 0.0):
            raise EvalDomainError("division by zero", node)
        return vals[0] / vals[1]
    if isinstance(node, Pow):
        if node.exponent < 0 and np.any(vals[0] == 0.0):
            raise EvalDomainError("zero base with negative exponent", node)
        return vals[0] ** node.exponent
    if isinstance(node, Neg):
        return -vals[0]
    if isinstance(node, Func):
        u = vals[0]
        if node.name == "sin":
            return np.sin(u)
        if node.name == "cos":
            return np.cos(u)
        if node.name == "exp":
            return np.exp(u)
        if node.name == "sqrt":
            if np.any(u < 0.0):
                raise EvalDomainError("square root of negative value", node)
            return np.sqrt(u)
        if node.name == "log":
            if np.any(u <= 0.0):
                raise EvalDomainError("log of non-positive value", node)
            return np.log(u)
    raise TypeError(f"cannot evaluate node of type {type(node).__name__}")


# ---------------------------------------------------------------------------
# printing (round trip: parse(to_text(e)) is structurally equal to e)

def _prec(e: Expr) -> int:
    if isinstance(e, (Add, Sub)):
        return 1
    if isinstance(e, (Mul, Div)):
        return 2
    if isinstance(e, (Pow, Neg)):
        return 3
    return 4  # Num, Var, Func


def _wrap(e: Expr, minimum: int) -> str:
    text = to_text(e)
    return f"({text})" if _prec(e) < minimum else text


def to_text(e: Expr) -> str:
    """Render an expression; re-parsing the text rebuilds an equal tree."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Add):
        return f"{_wrap(e.left, 1)} + {_wrap(e.right, 2)}"
    if isinstance(e, Sub):
        return f"{_wrap(e.left, 1)} - {_wrap(e.right, 2)}"
    if isinstance(e, Mul):
        return f"{_wrap(e.left, 2)} * {_wrap(e.right, 3)}"
    if isinstance(e, Div):
        return f"{_wrap(e.left, 2)} / {_wrap(e.right, 3)}"
    if isinstance(e, Pow):
        base = to_text(e.base) if _prec(e.base) == 4 else f"({to_text(e.base)})"
        return f"{base}^{e.exponent}"
    if isinstance(e, Neg):
        inner = e.operand
        body = to_text(inner) if _prec(inner) == 4 else f"({to_text(inner)})"
        return f"-{body}"
    if isinstance(e, Func):
        return f"{e.name}({to_text(e.argument)})"
    raise TypeError(f"cannot print node of type {type(e).__name__}")


# ---------------------------------------------------------------------------
# parser

_NUMBER_RE = re.compile(r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_IDENT_RE = re.compile(r"x\d+\Z")
_INT_RE = re.compile(r"[+-]?\d+\Z")


class _Parser:
    def __init__(self, text: str, n: int):
        self.text = text
        self.n = n
        self.pos = 0

    def error(self, message: str, offset: int | None = None):
        raise ParseError(message, self.pos if offset is None else offset)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def accept(self, ch: str) -> bool:
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def expect(self, ch: str):
        if not self.accept(ch):
            self.error(f"expected '{ch}'")

    def parse_expr(self) -> Expr:
        node = self.parse_term()
        while True:
            if self.accept("+"):
                node = add(node, self.parse_term())
            elif self.accept("-"):
                node = sub(node, self.parse_term())
            else:
                return node

    def parse_term(self) -> Expr:
        node = self.parse_factor()
        while True:
            if self.accept("*"):
                node = mul(node, self.parse_factor())
            elif self.accept("/"):
                node = div(node, self.parse_factor())
            else:
                return node

    def parse_factor(self) -> Expr:
        node = self.parse_base()
        if self.accept("^"):
            self.skip_ws()
            start = self.pos
            if self.pos < len(self.text) and self.text[self.pos] in "+-":
                self.pos += 1
            m = _NUMBER_RE.match(self.text, self.pos)
            if not m:
                self.error("integer exponent expected", start)
            token = self.text[start:m.end()]
            if not _INT_RE.match(token):
                self.error(f"integer exponent expected, got '{token}'", start)
            self.pos = m.end()
            node = powi(node, int(token))
        return node

    def parse_base(self) -> Expr:
        self.skip_ws()
        if self.pos >= len(self.text):
            self.error("unexpected end of input")
        ch = self.text[self.pos]
        if ch == "-":
            self.pos += 1
            return neg(self.parse_base())
        if ch == "(":
            self.pos += 1
            node = self.parse_expr()
            self.expect(")")
            return node
        m = _NUMBER_RE.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            return Num(float(m.group()))
        m = _NAME_RE.match(self.text, self.pos)
        if m:
            name = m.group()
            start = self.pos
            self.pos = m.end()
            if name == "pi":
                return PI
            if name in _FUNC_NAMES:
                self.expect("(")
                argument = self.parse_expr()
                self.expect(")")
                return _FUNC_BUILDERS[name](argument)
            if _IDENT_RE.match(name):
                index = int(name[1:])
                if index < 1 or index > self.n:
                    self.error(
                        f"variable index out of range: {name} with n={self.n}",
                        start)
                return Var(index)
            self.error(f"unknown identifier '{name}'", start)
        self.error(f"unexpected character '{ch}'")


def parse(text: str, n: int) -> Expr:
    """Parse expression text over coordinates x1..xn."""
    parser = _Parser(text, n)
    node = parser.parse_expr()
    parser.skip_ws()
    if parser.pos != len(text):
        parser.error("unexpected trailing input")
    return node

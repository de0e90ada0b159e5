"""A small deterministic expression language for grid-sampled function families.

Grammar (whitespace-insensitive)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := unary ('^' factor)?
    unary  := '-' unary | atom
    atom   := number | ident | ident '(' expr ')' | '(' expr ')'

``^`` is right-associative and binds its base as a unary, so ``-x^2`` is
``(-x)^2``.  Identifiers are the variables ``x`` and ``k``, the constants
``pi`` and ``e``, and the one-argument functions sin, cos, tan, exp, log,
abs, sqrt.  Anything else is rejected with a position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .spaces import Element, Grid

__all__ = [
    "Expr", "Num", "Var", "Const", "Neg", "Bin", "Call",
    "ParseError", "EvalDomainError",
    "parse", "evaluate", "to_text", "materialize_family",
]

VARIABLES = ("x", "k")
CONSTANTS = {"pi": math.pi, "e": math.e}
FUNCTIONS = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan,
    "exp": math.exp, "log": math.log, "abs": abs, "sqrt": math.sqrt,
}


class ParseError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class EvalDomainError(ArithmeticError):
    def __init__(self, message: str, locus: str, pos: int):
        super().__init__(f"{message} in '{locus}' (at position {pos})")
        self.locus = locus
        self.pos = pos


@dataclass(frozen=True)
class Expr:
    pos: int


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Const(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class Bin(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek(self) -> str:
        self._skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _take(self, ch: str) -> bool:
        if self._peek() == ch:
            self.pos += 1
            return True
        return False

    def parse(self) -> Expr:
        node = self.expr()
        self._skip_ws()
        if self.pos < len(self.text):
            raise ParseError(f"unexpected {self.text[self.pos]!r}", self.pos)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while True:
            self._skip_ws()
            start = self.pos
            if self._take("+"):
                node = Bin(start, "+", node, self.term())
            elif self._take("-"):
                node = Bin(start, "-", node, self.term())
            else:
                return node

    def term(self) -> Expr:
        node = self.factor()
        while True:
            self._skip_ws()
            start = self.pos
            if self._take("*"):
                node = Bin(start, "*", node, self.factor())
            elif self._take("/"):
                node = Bin(start, "/", node, self.factor())
            else:
                return node

    def factor(self) -> Expr:
        node = self.unary()
        self._skip_ws()
        start = self.pos
        if self._take("^"):
            return Bin(start, "^", node, self.factor())
        return node

    def unary(self) -> Expr:
        self._skip_ws()
        start = self.pos
        if self._take("-"):
            return Neg(start, self.unary())
        return self.atom()

    def atom(self) -> Expr:
        self._skip_ws()
        start = self.pos
        if self.pos >= len(self.text):
            raise ParseError("unexpected end of input", start)
        ch = self.text[self.pos]
        if ch == "(":
            self.pos += 1
            node = self.expr()
            if not self._take(")"):
                raise ParseError("expected ')'", self.pos)
            return node
        if ch.isdigit() or ch == ".":
            return self._number(start)
        if ch.isalpha() or ch == "_":
            return self._identifier(start)
        raise ParseError(f"unexpected {ch!r}", start)

    def _number(self, start: int) -> Num:
        i = self.pos
        text = self.text
        while i < len(text) and text[i].isdigit():
            i += 1
        if i < len(text) and text[i] == ".":
            i += 1
            while i < len(text) and text[i].isdigit():
                i += 1
        if i < len(text) and text[i] in "eE":
            j = i + 1
            if j < len(text) and text[j] in "+-":
                j += 1
            if j < len(text) and text[j].isdigit():
                i = j
                while i < len(text) and text[i].isdigit():
                    i += 1
        literal = text[self.pos : i]
        try:
            value = float(literal)
        except ValueError:
            raise ParseError(f"bad number {literal!r}", start) from None
        self.pos = i
        return Num(start, value)

    def _identifier(self, start: int) -> Expr:
        i = self.pos
        text = self.text
        while i < len(text) and (text[i].isalnum() or text[i] == "_"):
            i += 1
        name = text[self.pos : i]
        self.pos = i
        if self._peek() == "(":
            if name not in FUNCTIONS:
                raise ParseError(f"unknown function {name!r}", start)
            self.pos += 1
            arg = self.expr()
            if not self._take(")"):
                raise ParseError("expected ')'", self.pos)
            return Call(start, name, arg)
        if name in VARIABLES:
            return Var(start, name)
        if name in CONSTANTS:
            return Const(start, name)
        if name in FUNCTIONS:
            raise ParseError(f"function {name!r} needs an argument", start)
        raise ParseError(f"unknown identifier {name!r}", start)


def parse(text: str) -> Expr:
    """Parse the expression text into a tree, rejecting anything off-grammar."""
    return _Parser(text).parse()


def evaluate(e: Expr, x: float, k: float) -> float:
    """Evaluate at (x, k).  Domain problems raise EvalDomainError, never NaN/inf."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return float(x) if e.name == "x" else float(k)
    if isinstance(e, Const):
        return CONSTANTS[e.name]
    if isinstance(e, Neg):
        return -evaluate(e.operand, x, k)
    if isinstance(e, Call):
        arg = evaluate(e.arg, x, k)
        try:
            out = float(FUNCTIONS[e.func](arg))
        except ValueError:
            raise EvalDomainError(f"{e.func} undefined for {arg!r}", to_text(e), e.pos) from None
        except OverflowError:
            raise EvalDomainError(f"{e.func} overflowed at {arg!r}", to_text(e), e.pos) from None
        if not math.isfinite(out):
            raise EvalDomainError(f"{e.func} produced a non-finite value", to_text(e), e.pos)
        return out
    if isinstance(e, Bin):
        a = evaluate(e.left, x, k)
        b = evaluate(e.right, x, k)
        if e.op == "+":
            out = a + b
        elif e.op == "-":
            out = a - b
        elif e.op == "*":
            out = a * b
        elif e.op == "/":
            if b == 0.0:
                raise EvalDomainError("division by zero", to_text(e), e.pos)
            out = a / b
        else:
            if a < 0.0 and b != math.floor(b):
                raise EvalDomainError("negative base with non-integer exponent",
                                      to_text(e), e.pos)
            if a == 0.0 and b < 0.0:
                raise EvalDomainError("zero base with negative exponent", to_text(e), e.pos)
            try:
                out = float(a**b)
            except OverflowError:
                raise EvalDomainError("power overflow", to_text(e), e.pos) from None
        if not math.isfinite(out):
            raise EvalDomainError("non-finite arithmetic result", to_text(e), e.pos)
        return out
    raise TypeError(f"not an expression node: {e!r}")


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def _fmt_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def to_text(e: Expr, parent_prec: int = 0, right_side: bool = False) -> str:
    """Normalized rendering; parse(to_text(parse(t))) reproduces the tree."""
    if isinstance(e, Num):
        return _fmt_number(e.value)
    if isinstance(e, (Var, Const)):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    if isinstance(e, Neg):
        inner = to_text(e.operand, 4)
        text = f"-{inner}"
        # as a right operand or under *, / the leading minus needs parens
        return f"({text})" if parent_prec >= 2 or (right_side and parent_prec >= 1) else text
    if isinstance(e, Bin):
        prec = _PREC[e.op]
        if e.op == "^":
            left = to_text(e.left, 4)
            right = to_text(e.right, prec)
            if isinstance(e.left, Neg):  # grammar folds a unary base into '^'
                left = to_text(e.left.operand, 4)
                left = f"-{left}"
            text = f"{left}^{right}"
        else:
            left = to_text(e.left, prec)
            right = to_text(e.right, prec, right_side=True)
            text = f"{left} {e.op} {right}"
        needs = prec < parent_prec or (right_side and prec == parent_prec)
        return f"({text})" if needs else text
    raise TypeError(f"not an expression node: {e!r}")


def materialize_family(e: Expr, k_values, grid: Grid, kind: str,
                       p: float | None = None) -> list[Element]:
    """One element per k value, sampled at the grid nodes."""
    k_values = list(k_values)
    if not k_values:
        raise ValueError("need at least one k value")
    if kind not in ("grid_sup", "grid_lp"):
        raise ValueError(f"family kind must be a grid kind, got {kind!r}")
    family = []
    for kv in k_values:
        values = []
        for i, t in enumerate(grid.nodes):
            try:
                values.append(evaluate(e, float(t), float(kv)))
            except EvalDomainError as err:
                raise EvalDomainError(
                    f"k={kv}, node {i} (t={t}): {err.args[0]}", err.locus, err.pos
                ) from None
        if kind == "grid_sup":
            family.append(Element.grid_sup(grid, values))
        else:
            family.append(Element.grid_lp(grid, values, 2.0 if p is None else p))
    return family

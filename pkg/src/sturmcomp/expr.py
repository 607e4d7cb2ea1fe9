"""Coefficient expressions: a small arithmetic language over ``x``.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Names are ``x``, ``pi``, or parameters bound at parse time.  Functions are
``sin cos exp log sqrt abs step``; ``step(e)`` is 1 for ``e >= 0`` and 0
otherwise.  Evaluation is vectorised over numpy arrays.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping

import numpy as np

__all__ = [
    "Expr",
    "Num",
    "Var",
    "Param",
    "Neg",
    "BinOp",
    "Call",
    "ParseError",
    "UnboundNameError",
    "parse_expr",
    "as_expr",
    "FUNCTIONS",
]


def _step(z):
    return np.where(z >= 0, 1.0, 0.0)


FUNCTIONS: dict[str, Callable] = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "step": _step,
}

_PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


class ParseError(ValueError):
    """Syntax error; ``offset`` is the byte offset into the UTF-8 source."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class UnboundNameError(ParseError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unbound name {name!r}", offset)
        self.name = name


class Expr:
    """Base class of the parse tree.  Nodes are immutable and hashable."""

    prec = _PREC_ATOM

    def __call__(self, x, **overrides):
        x = np.asarray(x, dtype=float)
        return np.array(np.broadcast_to(self._eval(x, overrides), x.shape), dtype=float)

    def _eval(self, x, env):  # pragma: no cover - abstract
        raise NotImplementedError

    def walk(self) -> Iterator["Expr"]:
        yield self

    def depends_on_x(self) -> bool:
        return any(isinstance(n, Var) for n in self.walk())

    def step_arguments(self) -> list["Expr"]:
        """Arguments of every ``step`` call; their sign changes are jumps."""
        return [n.arg for n in self.walk() if isinstance(n, Call) and n.name == "step"]

    # arithmetic builds new trees; used to combine coefficients
    def __add__(self, other):
        return BinOp("+", self, as_expr(other))

    def __radd__(self, other):
        return BinOp("+", as_expr(other), self)

    def __sub__(self, other):
        return BinOp("-", self, as_expr(other))

    def __rsub__(self, other):
        return BinOp("-", as_expr(other), self)

    def __mul__(self, other):
        return BinOp("*", self, as_expr(other))

    def __rmul__(self, other):
        return BinOp("*", as_expr(other), self)

    def __truediv__(self, other):
        return BinOp("/", self, as_expr(other))

    def __rtruediv__(self, other):
        return BinOp("/", as_expr(other), self)

    def __pow__(self, other):
        return BinOp("^", self, as_expr(other))

    def __neg__(self):
        return Neg(self)

    def __str__(self):
        return self.to_text()

    def to_text(self) -> str:  # pragma: no cover - abstract
        raise NotImplementedError


def _wrap(node: Expr, min_prec: int) -> str:
    text = node.to_text()
    return f"({text})" if node.prec < min_prec else text


@dataclass(frozen=True, eq=True)
class Num(Expr):
    value: float

    @property
    def prec(self):
        return _PREC_UNARY if math.copysign(1.0, self.value) < 0 else _PREC_ATOM

    def _eval(self, x, env):
        return np.full(x.shape, self.value)

    def to_text(self):
        return repr(float(self.value))


@dataclass(frozen=True, eq=True)
class Var(Expr):
    def _eval(self, x, env):
        return x

    def to_text(self):
        return "x"


@dataclass(frozen=True, eq=True)
class Param(Expr):
    name: str
    value: float

    def _eval(self, x, env):
        return np.full(x.shape, float(env.get(self.name, self.value)))

    def to_text(self):
        return self.name


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    operand: Expr
    prec = _PREC_UNARY

    def _eval(self, x, env):
        return -self.operand._eval(x, env)

    def walk(self):
        yield self
        yield from self.operand.walk()

    def to_text(self):
        # "-2" would re-parse as the literal Num(-2.0)
        if isinstance(self.operand, Num):
            return f"-({self.operand.to_text()})"
        return "-" + _wrap(self.operand, _PREC_UNARY)


_BIN_PREC = {"+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL, "/": _PREC_MUL, "^": _PREC_POW}


@dataclass(frozen=True, eq=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    @property
    def prec(self):
        return _BIN_PREC[self.op]

    def _eval(self, x, env):
        lhs = self.left._eval(x, env)
        rhs = self.right._eval(x, env)
        if self.op == "+":
            return lhs + rhs
        if self.op == "-":
            return lhs - rhs
        if self.op == "*":
            return lhs * rhs
        if self.op == "/":
            return lhs / rhs
        return np.power(lhs, rhs)

    def walk(self):
        yield self
        yield from self.left.walk()
        yield from self.right.walk()

    def to_text(self):
        p = self.prec
        if self.op == "^":
            return f"{_wrap(self.left, _PREC_ATOM)}^{_wrap(self.right, _PREC_UNARY)}"
        return f"{_wrap(self.left, p)} {self.op} {_wrap(self.right, p + 1)}"


@dataclass(frozen=True, eq=True)
class Call(Expr):
    name: str
    arg: Expr

    def _eval(self, x, env):
        return FUNCTIONS[self.name](self.arg._eval(x, env))

    def walk(self):
        yield self
        yield from self.arg.walk()

    def to_text(self):
        return f"{self.name}({self.arg.to_text()})"


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Num(float(value))


# -- parsing -----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


class _Parser:
    def __init__(self, text: str, params: Mapping[str, float]):
        self.text = text
        self.params = params
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None or m.end() == pos:
                if text[pos:].strip() == "":
                    break
                start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
                raise ParseError(f"unexpected character {text[start]!r}", self._byte(start))
            kind = m.lastgroup
            if kind is None:  # trailing whitespace
                break
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.i = 0

    def _byte(self, char_pos: int) -> int:
        return len(self.text[:char_pos].encode("utf-8"))

    def peek(self, k: int = 0):
        j = self.i + k
        return self.tokens[j] if j < len(self.tokens) else ("end", "", len(self.text))

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.take()
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", self._byte(pos))

    def parse(self) -> Expr:
        if not self.tokens:
            raise ParseError("empty expression", 0)
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {text!r}", self._byte(pos))
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
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            nxt, nxt_after = self.peek(), self.peek(1)
            # a bare literal folds into a negative number unless it is a base of ^
            if nxt[0] == "num" and nxt_after[1] != "^":
                self.take()
                return Num(-float(nxt[1]))
            return Neg(self.unary())
        if kind == "op" and text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if text not in FUNCTIONS:
                    raise ParseError(f"unknown function {text!r}", self._byte(pos))
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            if text == "x":
                return Var()
            if text in self.params:
                return Param(text, float(self.params[text]))
            if text == "pi":
                return Param("pi", math.pi)
            if text in FUNCTIONS:
                raise ParseError(f"function {text!r} needs an argument", self._byte(pos))
            raise UnboundNameError(text, self._byte(pos))
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"unexpected {found}", self._byte(pos))


def parse_expr(text: str, params: Mapping[str, float] | None = None) -> Expr:
    """Parse ``text`` into an :class:`Expr`.

    Names other than ``x`` and ``pi`` must be keys of ``params``; their values
    are bound into the tree as :class:`Param` nodes so that printing keeps the
    names.

    >>> float(parse_expr("step(x - 0.5) * 4")(0.75))
    4.0
    """
    return _Parser(text, params or {}).parse()

"""Infix expression language for time-dependent rates.

Grammar (lowest to highest precedence)::

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right-associative
    atom    := NUMBER | 't' | FUNC '(' sum ')' | '(' sum ')'

so ``-2^2`` is ``-(2^2)`` and ``2^-1`` is ``2^(-1)``. ``log`` is the natural
logarithm.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "tanh": np.tanh,
    "cosh": np.cosh,
    "sinh": np.sinh,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
}

MAX_NESTING = 64
MAX_TREE_DEPTH = 400


class ExprError(ValueError):
    pass


class ParseError(ExprError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ParseError):
    def __init__(self, name, offset):
        super().__init__(f"unknown identifier {name!r}", offset)
        self.name = name


class DomainError(ExprError):
    def __init__(self, message, node):
        super().__init__(f"{message} in {to_text(node)!r}")
        self.node = node


class NonFiniteError(ExprError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str = "t"


@dataclass(frozen=True)
class Neg:
    operand: "RateExpr"


@dataclass(frozen=True)
class Add:
    left: "RateExpr"
    right: "RateExpr"


@dataclass(frozen=True)
class Sub:
    left: "RateExpr"
    right: "RateExpr"


@dataclass(frozen=True)
class Mul:
    left: "RateExpr"
    right: "RateExpr"


@dataclass(frozen=True)
class Div:
    left: "RateExpr"
    right: "RateExpr"


@dataclass(frozen=True)
class Pow:
    left: "RateExpr"
    right: "RateExpr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "RateExpr"


RateExpr = Union[Num, Var, Neg, Add, Sub, Mul, Div, Pow, Call]

_BINARY = {"+": Add, "-": Sub, "*": Mul, "/": Div, "^": Pow}
_SYMBOL = {Add: "+", Sub: "-", Mul: "*", Div: "/", Pow: "^"}

_TOKEN = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
)


@dataclass
class _Tok:
    kind: str
    text: str
    offset: int  # byte offset into the UTF-8 encoding


def _tokenize(text):
    toks = []
    pos = 0
    byte = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", byte)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), byte))
        byte += len(m.group().encode("utf-8"))
        pos = m.end()
    toks.append(_Tok("end", "", byte))
    return toks


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0
        self.depth = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def advance(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise ParseError(f"expected {text!r}, found {found!r}", self.tok.offset)
        return self.advance()

    def enter(self):
        self.depth += 1
        if self.depth > MAX_NESTING:
            raise ParseError("expression nested too deeply", self.tok.offset)

    def sum(self):
        left = self.product()
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            left = _BINARY[op](left, self.product())
        return left

    def product(self):
        left = self.unary()
        while self.tok.text in ("*", "/"):
            op = self.advance().text
            left = _BINARY[op](left, self.unary())
        return left

    def unary(self):
        if self.tok.text == "-":
            self.advance()
            self.enter()
            node = Neg(self.unary())
            self.depth -= 1
            return node
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.text == "^":
            self.advance()
            self.enter()
            node = Pow(base, self.unary())
            self.depth -= 1
            return node
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "ident":
            self.advance()
            if tok.text == "t":
                return Var()
            if tok.text not in FUNCTIONS:
                raise UnknownIdentifierError(tok.text, tok.offset)
            self.expect("(")
            self.enter()
            arg = self.sum()
            self.depth -= 1
            self.expect(")")
            return Call(tok.text, arg)
        if tok.text == "(":
            self.advance()
            self.enter()
            node = self.sum()
            self.depth -= 1
            self.expect(")")
            return node
        found = tok.text or "end of input"
        raise ParseError(f"unexpected {found!r}", tok.offset)


def parse(text: str) -> RateExpr:
    p = _Parser(text)
    node = p.sum()
    if p.tok.kind != "end":
        raise ParseError(f"unexpected {p.tok.text!r}", p.tok.offset)
    if tree_depth(node) > MAX_TREE_DEPTH:
        raise ParseError("expression too deep to evaluate", 0)
    return node


def _children(node):
    if isinstance(node, (Num, Var)):
        return ()
    if isinstance(node, Neg):
        return (node.operand,)
    if isinstance(node, Call):
        return (node.arg,)
    return (node.left, node.right)


def tree_depth(node: RateExpr) -> int:
    deepest = 0
    stack = [(node, 1)]
    while stack:
        n, d = stack.pop()
        deepest = max(deepest, d)
        stack.extend((c, d + 1) for c in _children(n))
    return deepest


# Binding strength used by the printer; mirrors the grammar above.
_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}


def _prec(node):
    if isinstance(node, Num) and node.value < 0:
        return 3
    return _PREC.get(type(node), 5)


def _num_text(v):
    v = float(v)
    if not np.isfinite(v):
        raise ExprError(f"literal {v!r} has no textual form")
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def to_text(node: RateExpr) -> str:
    """Pretty-print with the minimum parentheses needed to reparse identically."""
    if isinstance(node, Num):
        return _num_text(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    if isinstance(node, Neg):
        inner = to_text(node.operand)
        if _prec(node.operand) < 3:
            inner = f"({inner})"
        return f"-{inner}"
    sym = _SYMBOL[type(node)]
    p = _PREC[type(node)]
    left, right = to_text(node.left), to_text(node.right)
    if isinstance(node, Pow):
        # atom on the left, unary allowed on the right
        if _prec(node.left) <= 4:
            left = f"({left})"
        if _prec(node.right) < 3:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(node.left) < p:
        left = f"({left})"
    # left-associative: a right operand at equal precedence needs parentheses
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {sym} {right}"


def evaluate(node: RateExpr, t):
    """Evaluate at ``t`` (a float or a numpy array of times).

    Raises DomainError for log/sqrt outside their domain, division by zero
    and non-real powers; NonFiniteError if the result overflows.
    """
    scalar = np.ndim(t) == 0
    with np.errstate(all="ignore"):
        out = _eval(node, np.asarray(t, dtype=float))
    if not np.all(np.isfinite(out)):
        raise NonFiniteError(f"non-finite value from {to_text(node)!r}")
    if scalar:
        return float(out)
    return np.broadcast_to(out, np.shape(t)).astype(float)


def _eval(node, t):
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Var):
        return t
    if isinstance(node, Neg):
        return -_eval(node.operand, t)
    if isinstance(node, Call):
        x = _eval(node.arg, t)
        if node.func == "log" and np.any(x <= 0.0):
            raise DomainError("log of a non-positive value", node)
        if node.func == "sqrt" and np.any(x < 0.0):
            raise DomainError("sqrt of a negative value", node)
        y = FUNCTIONS[node.func](x)
        if not np.all(np.isfinite(y)):
            raise NonFiniteError(f"non-finite value from {to_text(node)!r}")
        return y
    a = _eval(node.left, t)
    b = _eval(node.right, t)
    if isinstance(node, Add):
        return a + b
    if isinstance(node, Sub):
        return a - b
    if isinstance(node, Mul):
        return a * b
    if isinstance(node, Div):
        if np.any(b == 0.0):
            raise DomainError("division by zero", node)
        return a / b
    # Pow
    if np.any((a < 0.0) & (np.floor(b) != b)):
        raise DomainError("negative base with non-integer exponent", node)
    if np.any((a == 0.0) & (b < 0.0)):
        raise DomainError("zero raised to a negative power", node)
    return np.power(a, b)


def compile_rate(text: str):
    """Parse once and return ``f(t)`` evaluating the expression."""
    node = parse(text)
    return lambda t: evaluate(node, t)

"""A tiny expression language over one variable ``x``.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' factor)?
    base   := NUMBER | 'x' | IDENT '(' expr (',' expr)* ')' | '(' expr ')'
    IDENT  := log | exp | sqrt | abs | min | max

``^`` is right-associative. There is no unary minus. Whitespace is ignored.
Evaluation is vectorised over numpy arrays.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np


class ExpressionError(ValueError):
    """Parse failure, with the byte offset where it happened."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Num, Var, BinOp, Call]

_UNARY = {"log": np.log, "exp": np.exp, "sqrt": np.sqrt, "abs": np.abs}
_VARIADIC = {"min": np.minimum, "max": np.maximum}
_BINARY = {"+": np.add, "-": np.subtract, "*": np.multiply, "/": np.divide, "^": np.power}
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(src: str):
    tokens = []
    pos = 0
    while pos < len(src):
        if src[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            raise ExpressionError(f"unexpected character {src[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, val, off = self.take()
        if val != text or kind != "op":
            found = "end of input" if kind == "end" else repr(val)
            raise ExpressionError(f"expected {text!r}, found {found}", off)

    def parse(self) -> Node:
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExpressionError(f"unexpected {val!r}", off)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        node = self.base()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            self.take()
            node = BinOp("^", node, self.factor())
        return node

    def base(self):
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "ident":
            if val == "x":
                return Var()
            if val not in _UNARY and val not in _VARIADIC:
                raise ExpressionError(f"unknown identifier {val!r}", off)
            self.expect("(")
            args = [self.expr()]
            while self.peek()[1] == "," and self.peek()[0] == "op":
                self.take()
                args.append(self.expr())
            self.expect(")")
            if val in _UNARY and len(args) != 1:
                raise ExpressionError(f"{val} takes 1 argument, got {len(args)}", off)
            if val in _VARIADIC and len(args) < 2:
                raise ExpressionError(f"{val} takes at least 2 arguments, got {len(args)}", off)
            return Call(val, tuple(args))
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExpressionError(f"expected a number, 'x', a function or '(', found {found}", off)


def parse(src: str) -> Node:
    """Parse ``src`` into an AST; raises :class:`ExpressionError`."""
    if not src or not src.strip():
        raise ExpressionError("empty expression", 0)
    return _Parser(src).parse()


def evaluate(node: Node, x):
    """Evaluate an AST at ``x`` (scalar or array)."""
    x = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        out = _eval(node, x)
    return np.broadcast_to(np.asarray(out, dtype=float), x.shape).copy()


def _eval(node, x):
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Var):
        return x
    if isinstance(node, BinOp):
        return _BINARY[node.op](_eval(node.left, x), _eval(node.right, x))
    if isinstance(node, Call):
        vals = [_eval(a, x) for a in node.args]
        if node.name in _UNARY:
            return _UNARY[node.name](vals[0])
        out = vals[0]
        for v in vals[1:]:
            out = _VARIADIC[node.name](out, v)
        return out
    raise TypeError(f"not an expression node: {node!r}")


def to_source(node: Node, parent_prec: int = 0) -> str:
    """Print an AST back to source; ``parse(to_source(t)) == t``."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_source(a) for a in node.args)})"
    prec = _PREC[node.op]
    if node.op == "^":
        # right-assoc: a bare power on the left needs parens, on the right not
        left = to_source(node.left, prec + 1)
        right = to_source(node.right, prec)
    else:
        left = to_source(node.left, prec)
        right = to_source(node.right, prec + 1)
    text = f"{left} {node.op} {right}"
    if prec < parent_prec:
        text = f"({text})"
    return text


def is_constant(node: Node) -> bool:
    if isinstance(node, Var):
        return False
    if isinstance(node, Num):
        return True
    if isinstance(node, BinOp):
        return is_constant(node.left) and is_constant(node.right)
    return all(is_constant(a) for a in node.args)

"""Recursive-descent parser for univariate formulas in ``x``.

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = ("-" | "+") unary | power ;
    power   = primary [ "^" unary ] ;
    primary = number | "x" | "pi" | "e"
            | func "(" expr ")" | "(" expr ")" ;
    func    = "sin" | "cos" | "exp" | "ln" | "abs" ;

``^`` is right associative and binds tighter than unary minus, so
``-x^2`` means ``-(x^2)``. The compiled evaluator works elementwise on
numpy arrays as well as on floats.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import ExpressionError

FUNCS: dict[str, Callable] = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "ln": np.log,
    "abs": np.abs,
}
CONSTS = {"pi": math.pi, "e": math.e}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"


Node = Union[Num, Var, Call, Unary, Binary]


def _byte_offset(source: str, index: int) -> int:
    return len(source[:index].encode("utf-8"))


def tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            start = pos
            while start < n and source[start].isspace():
                start += 1
            raise ExpressionError(f"unexpected character {source[start]!r}",
                                  _byte_offset(source, start))
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), _byte_offset(source, m.start(kind))))
        pos = m.end()
    tokens.append(("end", "", _byte_offset(source, n)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, off = self.take()
        if text != value:
            found = "end of input" if kind == "end" else repr(text)
            raise ExpressionError(f"expected {value!r}, found {found}", off)

    def parse(self) -> Node:
        node = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise ExpressionError(f"unexpected {text!r}", off)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Node:
        kind, text, _ = self.peek()
        if kind == "op" and text in ("-", "+"):
            self.take()
            arg = self.unary()
            return Unary("-", arg) if text == "-" else arg
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return Binary("^", base, self.unary())
        return base

    def primary(self) -> Node:
        kind, text, off = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text == "x":
                return Var()
            if text in CONSTS:
                return Num(CONSTS[text])
            if text in FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            raise ExpressionError(f"unknown identifier {text!r}", off)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExpressionError(f"unexpected {found}", off)


def parse(source: str) -> Node:
    if not isinstance(source, str):
        raise ExpressionError("expression source must be text")
    return _Parser(source).parse()


def compile_node(node: Node) -> Callable:
    """Turn an AST into a closure over numpy ufuncs."""
    if isinstance(node, Num):
        v = node.value
        return lambda x: v + 0.0 * x
    if isinstance(node, Var):
        return lambda x: x + 0.0
    if isinstance(node, Call):
        fn = FUNCS[node.func]
        arg = compile_node(node.arg)
        return lambda x: fn(arg(x))
    if isinstance(node, Unary):
        arg = compile_node(node.arg)
        return lambda x: -arg(x)
    left = compile_node(node.left)
    right = compile_node(node.right)
    op = node.op
    if op == "+":
        return lambda x: left(x) + right(x)
    if op == "-":
        return lambda x: left(x) - right(x)
    if op == "*":
        return lambda x: left(x) * right(x)
    if op == "/":
        return lambda x: left(x) / right(x)
    if isinstance(node.right, Num) and float(node.right.value).is_integer():
        k = int(node.right.value)
        return lambda x: left(x) ** k
    return lambda x: np.power(left(x), right(x))


def compile_expression(source: str) -> Callable:
    fn = compile_node(parse(source))

    def evaluate(x):
        with np.errstate(all="ignore"):
            if np.ndim(x) == 0:
                return float(fn(np.float64(x)))
            return np.asarray(fn(np.asarray(x, dtype=float)), dtype=float)

    return evaluate

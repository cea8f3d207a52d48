"""Recursive-descent parser for scalar formulas in x0.., u0.., t."""

import math
import re
from typing import List, Tuple

from charflow.errors import DimensionError, ExprSyntaxError, UnknownIdentifierError

from .nodes import FUNCTION_ARITY, BinOp, Call, Neg, Node, Num, Var


_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_VARIABLE = re.compile(r"([xu])(\d+)$")
_CONSTANTS = {"pi": math.pi}
_SYMBOLS = "+-*/^(),"

Token = Tuple[str, str, int]  # (kind, text, byte offset)


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        m = _NUMBER.match(text, i)
        if m:
            tokens.append(("num", m.group(0), _byte_offset(text, i)))
            i = m.end()
            continue
        m = _IDENT.match(text, i)
        if m:
            tokens.append(("ident", m.group(0), _byte_offset(text, i)))
            i = m.end()
            continue
        if ch in _SYMBOLS:
            tokens.append((ch, ch, _byte_offset(text, i)))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character {ch!r}", _byte_offset(text, i), text)
    tokens.append(("end", "", _byte_offset(text, len(text))))
    return tokens


class _Parser:
    """Precedence: ^ (right-assoc) > unary minus > * / > + -."""

    def __init__(self, text: str, n: int, m: int):
        self.text = text
        self.n = n
        self.m = m
        self.tokens = tokenize(text)
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok[0] != kind:
            found = tok[1] or "end of input"
            raise ExprSyntaxError(f"expected '{kind}' but found '{found}'", tok[2], self.text)
        return self.advance()

    def parse(self) -> Node:
        node = self.expression()
        tok = self.peek()
        if tok[0] != "end":
            raise ExprSyntaxError(f"unexpected '{tok[1]}'", tok[2], self.text)
        return node

    def expression(self) -> Node:
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[0] == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[0] == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, text, offset = self.peek()
        if kind == "num":
            value = float(text)
            if math.isinf(value):
                raise ExprSyntaxError(f"number {text} overflows a double", offset, self.text)
            self.advance()
            return Num(value)
        if kind == "(":
            self.advance()
            node = self.expression()
            self.expect(")")
            return node
        if kind == "ident":
            self.advance()
            if self.peek()[0] == "(":
                return self.call(text, offset)
            return self.identifier(text, offset)
        found = text or "end of input"
        raise ExprSyntaxError(f"unexpected '{found}'", offset, self.text)

    def call(self, name: str, offset: int) -> Node:
        if name not in FUNCTION_ARITY:
            raise UnknownIdentifierError(name, offset)
        self.expect("(")
        args = [self.expression()]
        while self.peek()[0] == ",":
            self.advance()
            args.append(self.expression())
        self.expect(")")
        arity = FUNCTION_ARITY[name]
        if len(args) != arity:
            raise ExprSyntaxError(f"{name} takes {arity} argument(s), got {len(args)}", offset, self.text)
        return Call(name, tuple(args))

    def identifier(self, name: str, offset: int) -> Node:
        if name == "t":
            return Var("t", 0)
        if name in _CONSTANTS:
            return Num(_CONSTANTS[name])
        m = _VARIABLE.match(name)
        if not m:
            raise UnknownIdentifierError(name, offset)
        kind, index = m.group(1), int(m.group(2))
        limit = self.n if kind == "x" else self.m
        if index >= limit:
            raise DimensionError(
                f"variable {name} at byte {offset}: index out of range "
                f"(declared {kind}-dimension {limit})"
            )
        return Var(kind, index)


def parse_tree(text: str, n: int, m: int) -> Node:
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0, text or "")
    return _Parser(text, n, m).parse()

"""Immutable expression tree and its text form."""

from dataclasses import dataclass
from typing import Tuple, Union


UNARY_FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "abs", "tanh", "sgn")
BINARY_FUNCTIONS = ("min", "max")
# Derivative helpers: sgn(a) with sgn(0) = +1, ifle(a, b, p, q) = p if a <= b else q
FUNCTION_ARITY = {**{name: 1 for name in UNARY_FUNCTIONS}, **{name: 2 for name in BINARY_FUNCTIONS}, "ifle": 4}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str  # 'x', 'u' or 't'
    index: int = 0

    @property
    def name(self) -> str:
        return "t" if self.kind == "t" else f"{self.kind}{self.index}"


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Node", ...]


Node = Union[Num, Var, Neg, BinOp, Call]


def to_text(node: Node) -> str:
    """Fully parenthesised infix text that parses back to the same tree."""
    if isinstance(node, Num):
        text = repr(float(node.value))
        return f"({text})" if node.value < 0 else text
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_text(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


def walk(node: Node):
    """Yield every node of the tree, parents first."""
    stack = [node]
    while stack:
        current = stack.pop()
        yield current
        if isinstance(current, Neg):
            stack.append(current.arg)
        elif isinstance(current, BinOp):
            stack.extend((current.right, current.left))
        elif isinstance(current, Call):
            stack.extend(reversed(current.args))


def free_variables(node: Node) -> frozenset:
    """Set of variable names ('x0', 'u1', 't', ...) the tree depends on."""
    return frozenset(n.name for n in walk(node) if isinstance(n, Var))


def is_zero(node: Node) -> bool:
    return isinstance(node, Num) and node.value == 0.0


def is_one(node: Node) -> bool:
    return isinstance(node, Num) and node.value == 1.0


KINK_FUNCTIONS = ("abs", "min", "max", "sgn", "ifle")


def has_kink_in(node: Node, kind: str) -> bool:
    """True when a non-smooth call (abs, min, max, sgn, ifle) takes an argument depending on `kind` ('x', 'u' or 't')."""
    for n in walk(node):
        if isinstance(n, Call) and n.name in KINK_FUNCTIONS:
            if any(isinstance(v, Var) and v.kind == kind for a in n.args for v in walk(a)):
                return True
    return False

"""Symbolic partial derivatives with constant folding.

Non-smooth primitives follow their almost-everywhere rule, ties broken toward
the first argument: d|a| = sgn(a) a' with sgn(0) = +1, d min(a, b) picks a' when
a <= b, d max(a, b) picks a' when a >= b.
"""

import math

from .nodes import BinOp, Call, Neg, Node, Num, Var, is_one, is_zero
from .evaluate import _scalar_namespace

ZERO = Num(0.0)
ONE = Num(1.0)
TWO = Num(2.0)


def _fold_call(name: str, args) -> Node:
    helpers = _scalar_namespace(["<constant>"])
    try:
        value = helpers[f"_{name}"](*[a.value for a in args], 0)
    except Exception:
        return Call(name, tuple(args))
    if isinstance(value, float) and math.isfinite(value):
        return Num(value)
    return Call(name, tuple(args))


def _fold(op: str, a: Num, b: Num, value: float) -> Node:
    """Num(value) when finite, else the unfolded operation."""
    if math.isfinite(value):
        return Num(value)
    return BinOp(op, a, b)


def neg(a: Node) -> Node:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def add(a: Node, b: Node) -> Node:
    if isinstance(a, Num) and isinstance(b, Num):
        return _fold("+", a, b, a.value + b.value)
    if is_zero(a):
        return b
    if is_zero(b):
        return a
    return BinOp("+", a, b)


def sub(a: Node, b: Node) -> Node:
    if isinstance(a, Num) and isinstance(b, Num):
        return _fold("-", a, b, a.value - b.value)
    if is_zero(b):
        return a
    if is_zero(a):
        return neg(b)
    return BinOp("-", a, b)


def mul(a: Node, b: Node) -> Node:
    if isinstance(a, Num) and isinstance(b, Num):
        return _fold("*", a, b, a.value * b.value)
    if is_zero(a) or is_zero(b):
        return ZERO
    if is_one(a):
        return b
    if is_one(b):
        return a
    return BinOp("*", a, b)


def div(a: Node, b: Node) -> Node:
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0:
        return _fold("/", a, b, a.value / b.value)
    if is_zero(a):
        return ZERO
    if is_one(b):
        return a
    return BinOp("/", a, b)


def power(a: Node, b: Node) -> Node:
    if isinstance(a, Num) and isinstance(b, Num):
        return _fold_pow(a, b)
    if is_zero(b):
        return ONE
    if is_one(b):
        return a
    return BinOp("^", a, b)


def _fold_pow(a: Num, b: Num) -> Node:
    if (a.value == 0 and b.value < 0) or (a.value < 0 and b.value != math.floor(b.value)):
        return BinOp("^", a, b)
    try:
        value = a.value ** b.value
    except OverflowError:
        return BinOp("^", a, b)
    return _fold("^", a, b, float(value))


def call(name: str, *args: Node) -> Node:
    if all(isinstance(a, Num) for a in args):
        return _fold_call(name, args)
    return Call(name, tuple(args))


def derivative(node: Node, var: Var) -> Node:
    """d node / d var as a new tree."""
    if isinstance(node, Num):
        return ZERO
    if isinstance(node, Var):
        return ONE if node == var else ZERO
    if isinstance(node, Neg):
        return neg(derivative(node.arg, var))
    if isinstance(node, BinOp):
        a, b = node.left, node.right
        da, db = derivative(a, var), derivative(b, var)
        if node.op == "+":
            return add(da, db)
        if node.op == "-":
            return sub(da, db)
        if node.op == "*":
            return add(mul(da, b), mul(a, db))
        if node.op == "/":
            if is_zero(db):
                return div(da, b)
            return div(sub(mul(da, b), mul(a, db)), power(b, TWO))
        if is_zero(db):
            return mul(mul(b, power(a, sub(b, ONE))), da)
        return mul(power(a, b), add(mul(db, call("log", a)), div(mul(b, da), a)))
    if isinstance(node, Call):
        return _call_derivative(node, var)
    raise TypeError(f"not an expression node: {node!r}")


def _call_derivative(node: Call, var: Var) -> Node:
    name, args = node.name, node.args
    if name in ("min", "max"):
        a, b = args
        da, db = derivative(a, var), derivative(b, var)
        if da == db:
            return da
        if name == "min":
            return call("ifle", a, b, da, db)
        return call("ifle", b, a, da, db)
    if name == "ifle":
        a, b, p, q = args
        dp, dq = derivative(p, var), derivative(q, var)
        if dp == dq:
            return dp
        return call("ifle", a, b, dp, dq)
    if name == "sgn":
        return ZERO

    a = args[0]
    da = derivative(a, var)
    if is_zero(da):
        return ZERO
    if name == "sin":
        return mul(call("cos", a), da)
    if name == "cos":
        return neg(mul(call("sin", a), da))
    if name == "exp":
        return mul(call("exp", a), da)
    if name == "log":
        return div(da, a)
    if name == "sqrt":
        return div(da, mul(TWO, call("sqrt", a)))
    if name == "tanh":
        return mul(sub(ONE, power(call("tanh", a), TWO)), da)
    if name == "abs":
        return mul(call("sgn", a), da)
    raise ValueError(f"no derivative rule for {name}")

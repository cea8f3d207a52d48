"""Compile expression trees into guarded Python callables.

Two flavours are produced per tree: a scalar one built on ``math`` for the
per-point integrators and a vectorised one built on ``numpy`` for grid sweeps.
Both raise ``ExprDomainError`` naming the offending sub-expression instead of
returning NaN or infinity.
"""

import math
from typing import Callable, Dict, List

import numpy as np

from charflow.errors import ExprDomainError

from .nodes import BinOp, Call, Neg, Node, Num, Var, to_text


def _codegen(node: Node, texts: List[str]) -> str:
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return "t" if node.kind == "t" else f"{node.kind}[{node.index}]"
    if isinstance(node, Neg):
        return f"(-{_codegen(node.arg, texts)})"

    texts.append(to_text(node))
    k = len(texts) - 1
    if isinstance(node, BinOp):
        left = _codegen(node.left, texts)
        right = _codegen(node.right, texts)
        if node.op in "+-*":
            return f"({left} {node.op} {right})"
        if node.op == "/":
            return f"_div({left}, {right}, {k})"
        return f"_pow({left}, {right}, {k})"
    if isinstance(node, Call):
        args = ", ".join(_codegen(a, texts) for a in node.args)
        return f"_{node.name}({args}, {k})"
    raise TypeError(f"not an expression node: {node!r}")


def _scalar_namespace(texts: List[str]) -> Dict[str, Callable]:
    def fault(k, message):
        raise ExprDomainError(message, texts[k])

    def _div(a, b, k):
        if b == 0:
            fault(k, "division by zero")
        return a / b

    def _pow(a, b, k):
        if a == 0 and b < 0:
            fault(k, "zero raised to a negative power")
        if a < 0 and b != math.floor(b):
            fault(k, "negative base with non-integer exponent")
        try:
            return float(a) ** b
        except OverflowError:
            fault(k, "overflow")

    def _exp(a, k):
        try:
            return math.exp(a)
        except OverflowError:
            fault(k, "overflow")

    def _log(a, k):
        if a <= 0:
            fault(k, "log of non-positive value")
        return math.log(a)

    def _sqrt(a, k):
        if a < 0:
            fault(k, "sqrt of negative value")
        return math.sqrt(a)

    return {
        "_div": _div,
        "_pow": _pow,
        "_exp": _exp,
        "_log": _log,
        "_sqrt": _sqrt,
        "_sin": lambda a, k: math.sin(a),
        "_cos": lambda a, k: math.cos(a),
        "_tanh": lambda a, k: math.tanh(a),
        "_abs": lambda a, k: abs(a),
        "_sgn": lambda a, k: 1.0 if a >= 0 else -1.0,
        "_min": lambda a, b, k: a if a <= b else b,
        "_max": lambda a, b, k: a if a >= b else b,
        "_ifle": lambda a, b, p, q, k: p if a <= b else q,
    }


def _vector_namespace(texts: List[str]) -> Dict[str, Callable]:
    def fault(k, message):
        raise ExprDomainError(message, texts[k])

    def _div(a, b, k):
        if np.any(np.asarray(b) == 0):
            fault(k, "division by zero")
        return np.divide(a, b)

    def _pow(a, b, k):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if np.any((a == 0) & (b < 0)):
            fault(k, "zero raised to a negative power")
        if np.any((a < 0) & (b != np.floor(b))):
            fault(k, "negative base with non-integer exponent")
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.power(a, b)
        if not np.all(np.isfinite(out)):
            fault(k, "overflow")
        return out

    def _exp(a, k):
        with np.errstate(over="ignore"):
            out = np.exp(a)
        if not np.all(np.isfinite(out)):
            fault(k, "overflow")
        return out

    def _log(a, k):
        if np.any(np.asarray(a) <= 0):
            fault(k, "log of non-positive value")
        return np.log(a)

    def _sqrt(a, k):
        if np.any(np.asarray(a) < 0):
            fault(k, "sqrt of negative value")
        return np.sqrt(a)

    return {
        "_div": _div,
        "_pow": _pow,
        "_exp": _exp,
        "_log": _log,
        "_sqrt": _sqrt,
        "_sin": lambda a, k: np.sin(a),
        "_cos": lambda a, k: np.cos(a),
        "_tanh": lambda a, k: np.tanh(a),
        "_abs": lambda a, k: np.abs(a),
        "_sgn": lambda a, k: np.where(np.asarray(a) >= 0, 1.0, -1.0),
        "_min": lambda a, b, k: np.where(np.asarray(a) <= b, a, b),
        "_max": lambda a, b, k: np.where(np.asarray(a) >= b, a, b),
        "_ifle": lambda a, b, p, q, k: np.where(np.asarray(a) <= b, p, q),
    }


def compile_scalar(node: Node) -> Callable:
    """Return f(x, u, t) -> float, raising ExprDomainError on faults."""
    texts: List[str] = []
    source = _codegen(node, texts)
    root_text = to_text(node)
    raw = eval(compile(f"lambda x, u, t: {source}", "<expr>", "eval"), _scalar_namespace(texts))

    def evaluate(x, u, t):
        try:
            value = float(raw(x, u, t))
        except OverflowError:
            raise ExprDomainError("overflow", root_text) from None
        if not math.isfinite(value):
            raise ExprDomainError("non-finite result", root_text)
        return value

    return evaluate


def compile_vector(node: Node) -> Callable:
    """Return f(x, u, t) -> ndarray where x[i], u[j] (and t) may be arrays."""
    texts: List[str] = []
    source = _codegen(node, texts)
    root_text = to_text(node)
    raw = eval(compile(f"lambda x, u, t: {source}", "<expr>", "eval"), _vector_namespace(texts))

    def evaluate(x, u, t, shape=None):
        with np.errstate(over="ignore", invalid="ignore"):
            value = np.asarray(raw(x, u, t), dtype=float)
        if shape is not None:
            value = np.broadcast_to(value, shape)
        if not np.all(np.isfinite(value)):
            raise ExprDomainError("non-finite result", root_text)
        return value

    return evaluate

"""User-facing expression handle: tree plus declared dimensions."""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, List, Sequence, Tuple, Union

from charflow.errors import DimensionError

from .derivative import derivative
from .evaluate import compile_scalar, compile_vector
from .nodes import Node, Num, Var, free_variables, to_text, walk
from .parser import parse_tree

VariableId = Union[str, Tuple[str, int], Var]


@dataclass(frozen=True)
class EvalEnv:
    x: Sequence[float]
    u: Sequence[float] = ()
    t: float = 0.0


@dataclass(frozen=True)
class Expr:
    """A parsed formula over x[0..n), u[0..m) and t. Immutable once built."""

    root: Node
    n: int
    m: int
    source: str = field(default="", compare=False)

    def __post_init__(self):
        for node in walk(self.root):
            if isinstance(node, Var) and node.kind != "t":
                limit = self.n if node.kind == "x" else self.m
                if node.index >= limit:
                    raise DimensionError(f"variable {node.name} out of range for dims ({self.n}, {self.m})")

    @cached_property
    def scalar(self) -> Callable:
        return compile_scalar(self.root)

    @cached_property
    def vector(self) -> Callable:
        return compile_vector(self.root)

    @cached_property
    def variables(self) -> frozenset:
        return free_variables(self.root)

    @property
    def is_constant(self) -> bool:
        return isinstance(self.root, Num)

    def depends_on(self, kind: str) -> bool:
        """True if any variable of the given kind ('x', 'u', 't') appears."""
        return any(name == "t" if kind == "t" else name.startswith(kind) for name in self.variables)

    def __call__(self, x, u=(), t: float = 0.0) -> float:
        return self.scalar(x, u, t)

    def __str__(self) -> str:
        return to_text(self.root)


def parse(text: str, dims: Tuple[int, int]) -> Expr:
    n, m = dims
    return Expr(parse_tree(text, n, m), n, m, source=text)


def print_expr(e: Expr) -> str:
    return to_text(e.root)


def eval_expr(e: Expr, env: EvalEnv) -> float:
    if len(env.x) != e.n or len(env.u) != e.m:
        raise DimensionError(
            f"environment dims ({len(env.x)}, {len(env.u)}) do not match expression dims ({e.n}, {e.m})"
        )
    return e.scalar(env.x, env.u, env.t)


def resolve_variable(var: VariableId, n: int, m: int) -> Var:
    if isinstance(var, Var):
        node = var
    elif isinstance(var, tuple):
        node = Var(var[0], int(var[1]) if var[0] != "t" else 0)
    elif var == "t":
        node = Var("t", 0)
    elif isinstance(var, str) and len(var) > 1 and var[0] in "xu" and var[1:].isdigit():
        node = Var(var[0], int(var[1:]))
    else:
        raise DimensionError(f"not a variable: {var!r}")
    if node.kind not in ("x", "u", "t"):
        raise DimensionError(f"not a variable: {var!r}")
    limit = {"x": n, "u": m, "t": 1}[node.kind]
    if node.index >= limit:
        raise DimensionError(f"variable {node.name} is not declared for dims ({n}, {m})")
    return node


def diff(e: Expr, var: VariableId) -> Expr:
    return Expr(derivative(e.root, resolve_variable(var, e.n, e.m)), e.n, e.m)


def gradient(e: Expr, kind: str) -> List[Expr]:
    """Partial derivatives with respect to every x (kind='x') or u (kind='u')."""
    count = e.n if kind == "x" else e.m
    return [diff(e, (kind, i)) for i in range(count)]


def constant(value: float, dims: Tuple[int, int]) -> Expr:
    return Expr(Num(float(value)), dims[0], dims[1], source=repr(float(value)))

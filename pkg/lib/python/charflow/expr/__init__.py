from .expression import (
    EvalEnv,
    Expr,
    constant,
    diff,
    eval_expr,
    gradient,
    parse,
    print_expr,
    resolve_variable,
)
from .nodes import BinOp, Call, Neg, Num, Var, free_variables, to_text

__all__ = [
    "Expr",
    "EvalEnv",
    "parse",
    "print_expr",
    "eval_expr",
    "diff",
    "gradient",
    "constant",
    "resolve_variable",
    "free_variables",
    "to_text",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
]

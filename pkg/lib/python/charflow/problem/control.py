"""Control system x' = f(x, u), running cost L(x, u, t) and control box."""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import List, Sequence, Tuple, Union

import numpy as np

from charflow.errors import DimensionError, SpecError
from charflow.expr import Expr, diff, gradient, parse
from charflow.expr.nodes import Var, has_kink_in, is_zero
from charflow.models import Boundary, Box

logger = logging.getLogger("charflow.problem")


@dataclass(frozen=True)
class ControlSet(Box):
    """Box of admissible controls; components may be unbounded."""

    @property
    def m(self) -> int:
        return self.dim


def _as_bound(value: Union[str, float, int]) -> float:
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "+inf", "infinity"):
            return math.inf
        if text in ("-inf", "-infinity"):
            return -math.inf
        try:
            return float(text)
        except ValueError:
            raise SpecError(f"not a bound: {value!r}") from None
    return float(value)


@dataclass(frozen=True)
class ControlProblem:
    f: Tuple[Expr, ...]
    L: Expr
    U: ControlSet
    domain: Box
    horizon: float = 1.0
    boundary: Boundary = Boundary.CLAMP

    def __post_init__(self):
        n, m = len(self.f), self.U.dim
        if n == 0:
            raise SpecError("dynamics must have at least one component")
        for k, fk in enumerate(self.f):
            if (fk.n, fk.m) != (n, m):
                raise DimensionError(f"dynamics component {k} declared with dims ({fk.n}, {fk.m}), expected ({n}, {m})")
            if fk.depends_on("t"):
                raise SpecError(f"dynamics component {k} depends on t; only the running cost may")
        if (self.L.n, self.L.m) != (n, m):
            raise DimensionError(f"running cost declared with dims ({self.L.n}, {self.L.m}), expected ({n}, {m})")
        if self.domain.dim != n:
            raise DimensionError(f"domain has {self.domain.dim} components, state has {n}")
        if not self.domain.bounded:
            raise SpecError("state domain must be bounded")
        if not self.horizon > 0:
            raise SpecError(f"horizon must be positive, got {self.horizon}")

    @classmethod
    def build(
        cls,
        dynamics: Sequence[str],
        lagrangian: str,
        control_lo: Sequence,
        control_hi: Sequence,
        domain_lo: Sequence,
        domain_hi: Sequence,
        horizon: float = 1.0,
        boundary: Union[str, Boundary] = Boundary.CLAMP,
    ) -> "ControlProblem":
        """Parse expression strings and assemble a problem."""
        n, m = len(dynamics), len(control_lo)
        if len(control_hi) != m:
            raise DimensionError("control lo/hi lengths differ")
        try:
            U = ControlSet(tuple(_as_bound(v) for v in control_lo), tuple(_as_bound(v) for v in control_hi))
            domain = Box(tuple(_as_bound(v) for v in domain_lo), tuple(_as_bound(v) for v in domain_hi))
        except ValueError as e:
            if isinstance(e, SpecError):
                raise
            raise SpecError(str(e)) from None
        try:
            mode = boundary if isinstance(boundary, Boundary) else Boundary(str(boundary).lower())
        except ValueError:
            raise SpecError(f"unknown boundary mode {boundary!r} (use clamp or periodic)") from None
        f = tuple(parse(text, (n, m)) for text in dynamics)
        return cls(f, parse(lagrangian, (n, m)), U, domain, float(horizon), mode)

    @property
    def n(self) -> int:
        return len(self.f)

    @property
    def m(self) -> int:
        return self.U.dim

    # Symbolic derivative tables, built once per problem.

    @cached_property
    def f_x(self) -> List[List[Expr]]:
        """f_x[k][i] = d f_k / d x_i"""
        return [gradient(fk, "x") for fk in self.f]

    @cached_property
    def f_u(self) -> List[List[Expr]]:
        """f_u[k][j] = d f_k / d u_j"""
        return [gradient(fk, "u") for fk in self.f]

    @cached_property
    def L_x(self) -> List[Expr]:
        return gradient(self.L, "x")

    @cached_property
    def L_u(self) -> List[Expr]:
        return gradient(self.L, "u")

    @cached_property
    def L_uu(self) -> List[List[Expr]]:
        return [[diff(Lj, ("u", k)) for k in range(self.m)] for Lj in self.L_u]

    @cached_property
    def control_affine_quadratic(self) -> bool:
        """f affine in u and L quadratic with diagonal Hessian in u, decided on the trees."""
        # derivative trees flatten kinks in u, so those go to the numeric branch
        if has_kink_in(self.L.root, "u") or any(has_kink_in(fk.root, "u") for fk in self.f):
            return False
        for row in self.f_u:
            if any(df.depends_on("u") for df in row):
                return False
        for j, row in enumerate(self.L_uu):
            for k, d2 in enumerate(row):
                if j == k:
                    if d2.depends_on("u"):
                        return False
                elif not is_zero(d2.root):
                    return False
        return True

    @cached_property
    def is_velocity_control(self) -> bool:
        """f_k = u_k for every component (the control is the velocity)."""
        if self.n != self.m:
            return False
        return all(self.f[k].root == Var("u", k) for k in range(self.n))

    @cached_property
    def is_quadratic_family(self) -> bool:
        """f = u, U = R^n and L = |u|^2 / 2."""
        if not self.is_velocity_control or np.any(np.isfinite(self.U.lower)) or np.any(np.isfinite(self.U.upper)):
            return False
        if self.L.depends_on("x") or self.L.depends_on("t") or not self.control_affine_quadratic:
            return False
        samples = np.array([[0.0] * self.m, [1.0] * self.m, [-2.0, *([0.5] * (self.m - 1))]])
        x = np.zeros(self.n)
        return all(abs(self.L.scalar(x, u, 0.0) - 0.5 * float(u @ u)) <= 1e-12 for u in samples)

    def wrap(self, x) -> np.ndarray:
        """Map a state into the domain under periodic boundaries; identity under clamp."""
        x = np.asarray(x, dtype=float)
        if self.boundary is Boundary.PERIODIC:
            lo, width = self.domain.lower, self.domain.width
            return lo + np.mod(x - lo, width)
        return x


def dynamics(prob: ControlProblem, x, u, t: float = 0.0) -> np.ndarray:
    _check_point(prob, x, u)
    return np.array([fk.scalar(x, u, t) for fk in prob.f], dtype=float)


def running_cost(prob: ControlProblem, x, u, t: float = 0.0) -> float:
    _check_point(prob, x, u)
    return prob.L.scalar(x, u, t)


def _check_point(prob: ControlProblem, x, u) -> None:
    if len(x) != prob.n or len(u) != prob.m:
        raise DimensionError(f"point dims ({len(x)}, {len(u)}) do not match problem dims ({prob.n}, {prob.m})")
    if not prob.U.contains(u, tol=1e-12):
        raise SpecError(f"control {list(u)} lies outside the control set")


def lagrangian_value(prob: ControlProblem, x, v, t: float = 0.0) -> float:
    """Velocity-form Lagrangian inf{L(x, u, t) : f(x, u) = v, u in U}.

    Defined for control-affine dynamics with a square invertible input matrix,
    where the control realising v is unique.
    """
    if any(df.depends_on("u") for row in prob.f_u for df in row):
        raise SpecError("velocity-form Lagrangian needs dynamics affine in the control")
    if prob.n != prob.m:
        raise SpecError(f"velocity-form Lagrangian needs as many controls as states ({prob.m} != {prob.n})")
    x = np.asarray(x, dtype=float)
    zero = np.zeros(prob.m)
    drift = np.array([fk.scalar(x, zero, t) for fk in prob.f])
    B = np.array([[df.scalar(x, zero, t) for df in row] for row in prob.f_u])
    try:
        u = np.linalg.solve(B, np.asarray(v, dtype=float) - drift)
    except np.linalg.LinAlgError:
        raise SpecError(f"input matrix is singular at x={x.tolist()}") from None
    if not prob.U.contains(u, tol=1e-12):
        raise SpecError(f"velocity {list(v)} needs control {u.tolist()} outside the control set")
    return prob.L.scalar(x, u, t)

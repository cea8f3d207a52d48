"""Hopf-Lax value min_y phi0(y) + |x - y|^2 / (2t), valid for f = u, L = |u|^2/2, U = R^n."""

from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from charflow.errors import SpecError
from charflow.expr import Expr
from charflow.problem import ControlProblem

GRID_POINTS_1D = 2001
GRID_POINTS_2D = 201

InitialFunction = Union[Expr, Callable[[np.ndarray], np.ndarray]]


def _vectorised(phi0: InitialFunction) -> Callable[[np.ndarray], np.ndarray]:
    """Rows of Y (k, n) -> values (k,)."""
    if isinstance(phi0, Expr):
        if phi0.depends_on("u") or phi0.depends_on("t"):
            raise SpecError("initial data may depend on x only")
        return lambda Y: phi0.vector(list(Y.T), [np.zeros(len(Y))] * phi0.m, 0.0, (len(Y),))
    return lambda Y: np.asarray(phi0(Y), dtype=float)


def hopf_lax_oracle(
    phi0: InitialFunction,
    t: float,
    x: Sequence[float],
    prob: Optional[ControlProblem] = None,
    half_width: Optional[float] = None,
) -> float:
    if prob is not None and not prob.is_quadratic_family:
        raise SpecError("Hopf-Lax oracle applies only to f = u, L = |u|^2/2 with unbounded controls")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    phi = _vectorised(phi0)
    if t < 0:
        raise SpecError(f"time must be non-negative, got {t}")
    if t == 0:
        return float(phi(x[None, :])[0])

    n = len(x)
    if n > 2:
        raise SpecError("Hopf-Lax oracle supports 1 or 2 dimensions")
    R = half_width if half_width is not None else 10.0 * max(1.0, t)

    def objective(Y: np.ndarray) -> np.ndarray:
        return phi(Y) + np.sum((Y - x) ** 2, axis=1) / (2 * t)

    count = GRID_POINTS_1D if n == 1 else GRID_POINTS_2D
    axes = [np.linspace(c - R, c + R, count) for c in x]
    mesh = np.meshgrid(*axes, indexing="ij")
    Y = np.stack([g.ravel() for g in mesh], axis=1)
    values = objective(Y)
    best = int(np.argmin(values))
    y_best, v_best = Y[best], float(values[best])
    step = 2 * R / (count - 1)

    if n == 1:
        c = y_best[0]
        res = minimize_scalar(
            lambda s: float(objective(np.array([[s]]))[0]),
            bounds=(c - step, c + step),
            method="bounded",
            options={"xatol": 1e-12},
        )
        return min(v_best, float(res.fun))

    res = minimize(
        lambda y: float(objective(y[None, :])[0]),
        y_best,
        method="L-BFGS-B",
        bounds=[(c - step, c + step) for c in y_best],
    )
    return min(v_best, float(res.fun))


def hopf_lax_on_grid(phi0: InitialFunction, t: float, points: np.ndarray, prob: Optional[ControlProblem] = None) -> np.ndarray:
    return np.array([hopf_lax_oracle(phi0, t, p, prob) for p in np.atleast_2d(points)])

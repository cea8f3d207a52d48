"""Fixed-step RK4 integration of the characteristic system.

State per seed: X (n), P (n), U (1) with
    X' = H_p(X, P),  P' = -H_x(X, P),  U' = P . H_p - H.
All seeds are advanced together as rows of one array.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from charflow.errors import DimensionError, EscapeError, SpecError
from charflow.expr import Expr, gradient
from charflow.models import Boundary
from charflow.problem import ControlProblem, hamiltonian_batch

logger = logging.getLogger("charflow.characteristics")

_ESCAPE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CharState:
    X: np.ndarray
    P: np.ndarray
    U: float
    z: np.ndarray
    t: float


@dataclass(frozen=True, eq=False)
class CharTrajectory:
    """One characteristic sampled at uniform stamps t_k = k * dt."""

    z: np.ndarray
    times: np.ndarray
    X: np.ndarray  # (K+1, n)
    P: np.ndarray  # (K+1, n)
    U: np.ndarray  # (K+1,)
    dt: float

    def __len__(self) -> int:
        return len(self.times)

    def state(self, k: int) -> CharState:
        return CharState(self.X[k].copy(), self.P[k].copy(), float(self.U[k]), self.z.copy(), float(self.times[k]))

    @property
    def states(self) -> List[CharState]:
        return [self.state(k) for k in range(len(self))]

    @property
    def final(self) -> CharState:
        return self.state(len(self) - 1)


def time_grid(T: float, dt: float) -> Tuple[np.ndarray, float]:
    """Uniform stamps over [0, T]; dt is shrunk slightly when it does not divide T."""
    if T < 0:
        raise SpecError(f"horizon must be non-negative, got {T}")
    if T == 0:
        return np.zeros(1), float(dt)
    if not 0 < dt <= T:
        raise SpecError(f"step dt={dt} must lie in (0, T={T}]")
    steps = max(1, int(round(T / dt)))
    if abs(steps * dt - T) > 1e-9 * T:
        steps = int(math.ceil(T / dt))
        logger.debug(f"dt={dt:g} does not divide T={T:g}; using {T / steps:g}")
    step = T / steps
    return step * np.arange(steps + 1), step


def characteristic_rhs(prob: ControlProblem) -> Callable[[float, np.ndarray], np.ndarray]:
    """Right-hand side on packed rows [X | P | U] of shape (S, 2n+1)."""
    n = prob.n

    def rhs(t: float, Y: np.ndarray) -> np.ndarray:
        X, P = Y[:, :n], Y[:, n : 2 * n]
        h = hamiltonian_batch(prob, X, P, t)
        dU = np.einsum("sk,sk->s", P, h.Hp) - h.value
        return np.hstack([h.Hp, -h.Hx, dU[:, None]])

    return rhs


def rk4_step(rhs: Callable, t: float, Y: np.ndarray, dt: float) -> np.ndarray:
    k1 = rhs(t, Y)
    k2 = rhs(t + dt / 2, Y + dt / 2 * k1)
    k3 = rhs(t + dt / 2, Y + dt / 2 * k2)
    k4 = rhs(t + dt, Y + dt * k3)
    return Y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_rows(
    prob: ControlProblem, X0, P0, U0, T: float, dt: float, t0: float = 0.0
) -> Tuple[np.ndarray, np.ndarray, float]:
    """Advance packed rows over [t0, t0 + T]; returns (times, Y of shape (K+1, S, 2n+1), step)."""
    times, Y, step, _ = _advance(prob, X0, P0, U0, T, dt, t0, freeze_escaped=False)
    return times, Y, step


def integrate_rows_masked(
    prob: ControlProblem, X0, P0, U0, T: float, dt: float, t0: float = 0.0
) -> Tuple[np.ndarray, np.ndarray, float, np.ndarray]:
    """Like integrate_rows, but rows leaving a clamped domain are frozen and flagged instead of raising."""
    return _advance(prob, X0, P0, U0, T, dt, t0, freeze_escaped=True)


def _advance(prob, X0, P0, U0, T, dt, t0, freeze_escaped):
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    P0 = np.atleast_2d(np.asarray(P0, dtype=float))
    U0 = np.atleast_1d(np.asarray(U0, dtype=float))
    grid, step = time_grid(T, dt)
    times = t0 + grid
    Y = np.empty((len(times), X0.shape[0], 2 * prob.n + 1))
    Y[0] = np.hstack([X0, P0, U0[:, None]])
    escaped = np.zeros(X0.shape[0], dtype=bool)

    rhs = characteristic_rhs(prob)
    clamp = prob.boundary is Boundary.CLAMP
    lo, hi = prob.domain.lower, prob.domain.upper
    n = prob.n
    if clamp:
        escaped = _outside(Y[0, :, :n], lo, hi)
        if escaped.any() and not freeze_escaped:
            _raise_escape(Y[0, :, :n], escaped, times[0])
    for k in range(len(times) - 1):
        live = ~escaped
        Y[k + 1] = Y[k]
        if live.any():
            Y[k + 1, live] = rk4_step(rhs, times[k], Y[k, live], step)
        if clamp:
            out = _outside(Y[k + 1, :, :n], lo, hi) & live
            if out.any():
                if not freeze_escaped:
                    _raise_escape(Y[k + 1, :, :n], out, times[k + 1])
                Y[k + 1, out] = Y[k, out]
                escaped |= out
    return times, Y, step, escaped


def _outside(X: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    return np.any((X < lo - _ESCAPE_TOL) | (X > hi + _ESCAPE_TOL), axis=1)


def _raise_escape(X: np.ndarray, mask: np.ndarray, t: float) -> None:
    row = int(np.argmax(mask))
    raise EscapeError(float(t), X[row].copy())


def initial_costate(prob: ControlProblem, u0: Expr, Z) -> Tuple[np.ndarray, np.ndarray]:
    """P(0) = grad u0(z) and U(0) = u0(z) for rows of Z."""
    if u0.n != prob.n:
        raise DimensionError(f"initial data declared over {u0.n} states, problem has {prob.n}")
    if u0.depends_on("u") or u0.depends_on("t"):
        raise SpecError("initial data may depend on x only")
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    S = Z.shape[0]
    xs, us = list(Z.T), [np.zeros(S)] * u0.m
    P0 = np.stack([g.vector(xs, us, 0.0, (S,)) for g in gradient(u0, "x")], axis=1)
    return P0, u0.vector(xs, us, 0.0, (S,)).copy()


def integrate_characteristic(prob: ControlProblem, u0: Expr, z, T: float, dt: float) -> CharTrajectory:
    z = np.asarray(z, dtype=float)
    if z.shape != (prob.n,):
        raise DimensionError(f"seed must have {prob.n} components")
    P0, U0 = initial_costate(prob, u0, z[None, :])
    return integrate_from(prob, z, P0[0], float(U0[0]), T, dt)


def integrate_from(prob: ControlProblem, x, p0, value0: float, T: float, dt: float, t0: float = 0.0) -> CharTrajectory:
    """Characteristic from an explicit (x, p0, U(0)); used by shooting and the Monge map."""
    times, Y, step = integrate_rows(prob, [x], [p0], [value0], T, dt, t0)
    n = prob.n
    return CharTrajectory(np.asarray(x, dtype=float).copy(), times, Y[:, 0, :n], Y[:, 0, n : 2 * n], Y[:, 0, 2 * n], step)


def value_along(prob: ControlProblem, traj: CharTrajectory) -> np.ndarray:
    """Running action int_0^t (P . H_p - H) ds by trapezoid quadrature at the stamps."""
    values = np.empty(len(traj))
    for k, t in enumerate(traj.times):
        h = hamiltonian_batch(prob, traj.X[k][None, :], traj.P[k][None, :], float(t))
        values[k] = float(traj.P[k] @ h.Hp[0] - h.value[0])
    if len(traj) == 1:
        return np.zeros(1)
    return cumulative_trapezoid(values, traj.times, initial=0.0)

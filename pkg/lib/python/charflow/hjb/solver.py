"""Semi-Lagrangian dynamic-programming scheme for V_t + H(x, V_x) = 0.

One step per stamp:
    V(t + dt, x) = min_u  dt * L(x, u, t) + V~(t, x - dt * f(x, u))
with V~ multilinear interpolation of the previous slice and the foot point
projected (clamp) or wrapped (periodic) into the grid.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from charflow.concurrency import map_row_chunks
from charflow.config.settings import get_solver_config
from charflow.errors import CFLViolationError, SpecError
from charflow.expr import Expr
from charflow.models import Boundary
from charflow.problem import ControlProblem, hamiltonian_batch

from .grid import GridSpec, ValueGrid, coerce_initial

logger = logging.getLogger("charflow.hjb")

InitialData = Union[Expr, np.ndarray]
_CACHE_LIMIT = 2_000_000


def control_samples(prob: ControlProblem, per_dim: Optional[int] = None, radius: Optional[float] = None) -> np.ndarray:
    """Tensor grid over the control box, unbounded components cut at +-radius; shape (Q, m)."""
    cfg = get_solver_config().hjb
    per_dim = int(per_dim or cfg["control_samples"])
    radius = float(radius if radius is not None else cfg["unbounded_control_radius"])
    axes = []
    for lo, hi in zip(prob.U.lo, prob.U.hi):
        a = lo if math.isfinite(lo) else min(-radius, hi - radius) if math.isfinite(hi) else -radius
        b = hi if math.isfinite(hi) else max(radius, a + radius)
        axes.append(np.linspace(a, b, per_dim) if b > a else np.array([a]))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def lattice_controls(prob: ControlProblem, grid: GridSpec, dt: float) -> np.ndarray:
    """Velocities that move foot points exactly onto nodes (1-D velocity control only)."""
    if not (prob.is_velocity_control and grid.dim == 1):
        raise SpecError("lattice controls need f = u in one dimension")
    h = grid.spacing[0]
    reach = grid.nodes[0] - 1
    v = np.arange(-reach, reach + 1) * h / dt
    lo, hi = prob.U.lo[0], prob.U.hi[0]
    v = v[(v >= lo - 1e-12) & (v <= hi + 1e-12)]
    return np.clip(v, lo, hi)[:, None]


def _velocities(prob: ControlProblem, nodes: np.ndarray, controls: np.ndarray) -> np.ndarray:
    """f at every (control, node) pair: shape (Q, N, n)."""
    xs = list(nodes.T)
    N = nodes.shape[0]
    return np.stack(
        [np.stack([fk.vector(xs, list(u), 0.0, (N,)) for fk in prob.f], axis=1) for u in controls]
    )


def cfl_limit(prob: ControlProblem, grid: GridSpec, controls: Optional[np.ndarray] = None) -> float:
    """min_i h_i / max|f_i| over nodes and sampled controls."""
    controls = control_samples(prob) if controls is None else controls
    nodes = grid.points()
    speeds = np.zeros(prob.n)
    for u in controls:
        speeds = np.maximum(speeds, np.max(np.abs(_velocities(prob, nodes, u[None, :])[0]), axis=0))
    with np.errstate(divide="ignore"):
        limits = np.where(speeds > 0, grid.spacing / np.where(speeds > 0, speeds, 1.0), np.inf)
    return float(np.min(limits))


def _foot(prob: ControlProblem, grid: GridSpec, X: np.ndarray) -> np.ndarray:
    lo, hi = np.asarray(grid.lo), np.asarray(grid.hi)
    if prob.boundary is Boundary.PERIODIC:
        return lo + np.mod(X - lo, hi - lo)
    return np.clip(X, lo, hi)


def _argmax_injection() -> bool:
    """Sampled controls are always joined by the Hamiltonian argmax unless configured off."""
    mode = str(get_solver_config().hjb.get("argmax_injection", "always")).lower()
    if mode not in ("always", "never"):
        raise SpecError(f"hjb.argmax_injection must be always or never, got {mode!r}")
    return mode == "always"


class _Stepper:
    """Advances one slice; node chunks are independent."""

    def __init__(self, prob: ControlProblem, grid: GridSpec, dt: float, controls: np.ndarray, inject: bool):
        self.prob = prob
        self.grid = grid
        self.dt = dt
        self.controls = controls
        self.inject = inject
        self.nodes = grid.points()
        self.cached = controls.shape[0] * self.nodes.shape[0] <= _CACHE_LIMIT
        self.F = _velocities(prob, self.nodes, controls) if self.cached else None
        self.time_dependent_cost = prob.L.depends_on("t")
        self.cost = self._running_cost(0.0) if self.cached and not self.time_dependent_cost else None

    def _running_cost(self, t: float) -> np.ndarray:
        xs = list(self.nodes.T)
        N = self.nodes.shape[0]
        return np.stack([self.prob.L.vector(xs, list(u), t, (N,)) for u in self.controls])

    def _pair(self, q: int, rows: np.ndarray, X: np.ndarray, t: float, cost):
        """Velocity and running cost of control q on the given rows."""
        if self.F is not None:
            F = self.F[q, rows]
        else:
            F = np.stack([fk.vector(list(X.T), list(self.controls[q]), 0.0, (len(rows),)) for fk in self.prob.f], axis=1)
        if cost is not None:
            return F, cost[q, rows]
        return F, self.prob.L.vector(list(X.T), list(self.controls[q]), t, (len(rows),))

    def step(self, V: np.ndarray, t: float, threads: int = 1) -> np.ndarray:
        interp = RegularGridInterpolator(tuple(self.grid.axes), V, method="linear")
        cost = self._running_cost(t) if self.cached and self.time_dependent_cost else self.cost
        injected = self._injected_controls(V, t) if self.inject else None

        def run(rows: np.ndarray) -> np.ndarray:
            X = self.nodes[rows]
            best = np.full(len(rows), np.inf)
            for q in range(len(self.controls)):
                F, L = self._pair(q, rows, X, t, cost)
                feet = _foot(self.prob, self.grid, X - self.dt * F)
                best = np.minimum(best, self.dt * L + interp(feet))
            if injected is not None:
                xs, us = list(X.T), list(injected[rows].T)
                F = np.stack([fk.vector(xs, us, t, (len(rows),)) for fk in self.prob.f], axis=1)
                L = self.prob.L.vector(xs, us, t, (len(rows),))
                feet = _foot(self.prob, self.grid, X - self.dt * F)
                best = np.minimum(best, self.dt * L + interp(feet))
            return best

        chunks = map_row_chunks(run, self.nodes.shape[0], threads)
        out = np.concatenate(chunks).reshape(self.grid.shape)
        if self.prob.boundary is Boundary.PERIODIC:
            _sync_periodic(out)
        return out

    def _injected_controls(self, V: np.ndarray, t: float) -> np.ndarray:
        grads = np.gradient(V, *self.grid.spacing) if self.grid.dim > 1 else [np.gradient(V, self.grid.spacing[0])]
        P = np.stack([g.ravel() for g in grads], axis=1)
        return hamiltonian_batch(self.prob, self.nodes, P, t).argmax_u


def _sync_periodic(V: np.ndarray) -> None:
    """The hi node duplicates the lo node on periodic axes."""
    for axis in range(V.ndim):
        index_hi = [slice(None)] * V.ndim
        index_lo = [slice(None)] * V.ndim
        index_hi[axis], index_lo[axis] = -1, 0
        V[tuple(index_hi)] = V[tuple(index_lo)]


def solve_hjb(
    prob: ControlProblem,
    phi0: InitialData,
    grid: GridSpec,
    T: float,
    dt: float,
    threads: int = 1,
    controls: Optional[np.ndarray] = None,
    t_start: float = 0.0,
    check_cfl: bool = True,
    inject: Optional[bool] = None,
) -> ValueGrid:
    if grid.dim != prob.n:
        raise SpecError(f"grid has {grid.dim} dimensions, problem has {prob.n}")
    if T < 0:
        raise SpecError(f"horizon must be non-negative, got {T}")
    if not dt > 0:
        raise SpecError(f"time step must be positive, got {dt}")
    steps = int(round(T / dt))
    if abs(steps * dt - T) > 1e-9 * max(1.0, T):
        raise SpecError(f"T={T:g} is not a multiple of dt={dt:g}")

    V0 = coerce_initial(phi0, grid)
    if prob.boundary is Boundary.PERIODIC:
        _sync_periodic(V0)
    controls = control_samples(prob) if controls is None else np.atleast_2d(controls)
    if check_cfl:
        limit = cfl_limit(prob, grid, controls)
        if dt > limit * (1 + 1e-9):
            raise CFLViolationError(dt, limit)

    stepper = _Stepper(prob, grid, dt, controls, _argmax_injection() if inject is None else inject)
    values = np.empty((steps + 1,) + grid.shape)
    values[0] = V0
    times = t_start + dt * np.arange(steps + 1)
    for k in range(steps):
        values[k + 1] = stepper.step(values[k], float(times[k]), threads)
    logger.debug(f"HJB solved: {grid.size} nodes, {steps} steps, {controls.shape[0]} sampled controls")
    return ValueGrid(grid, times, values, dt, t_start)


@dataclass(frozen=True)
class SemigroupOp:
    """phi -> T_s phi on a fixed grid and step."""

    prob: ControlProblem
    grid: GridSpec
    dt: float
    threads: int = 1

    def apply(self, phi: InitialData, s: float) -> np.ndarray:
        return semigroup_apply(self, phi, s)


def semigroup_apply(op: SemigroupOp, phi: InitialData, s: float) -> np.ndarray:
    steps = s / op.dt
    if s < 0 or abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
        raise SpecError(f"s={s:g} must be a non-negative multiple of dt={op.dt:g}")
    if round(steps) == 0:
        return coerce_initial(phi, op.grid)
    return solve_hjb(op.prob, phi, op.grid, s, op.dt, op.threads).final.copy()

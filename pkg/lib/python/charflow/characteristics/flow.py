"""Seed-grid flow map z -> X(t, z): Jacobians, caustic time and solution reconstruction."""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import Delaunay
from scipy.spatial import QhullError

from charflow.concurrency import map_row_chunks
from charflow.config.settings import get_solver_config
from charflow.errors import ExtrapolationError, SpecError
from charflow.expr import Expr
from charflow.problem import ControlProblem

from .integrator import initial_costate, integrate_rows

logger = logging.getLogger("charflow.characteristics")


def seed_grid(lo: Sequence[float], hi: Sequence[float], counts: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    """Uniform seed grid in 'ij' order; returns (Z of shape (S, n), spacing per axis)."""
    if len(lo) != len(hi) or len(lo) != len(counts):
        raise SpecError("seed grid bounds and counts must have one entry per state")
    if any(c < 1 for c in counts):
        raise SpecError("seed grid needs at least one seed per dimension")
    axes = [np.linspace(a, b, c) for a, b, c in zip(lo, hi, counts)]
    spacing = np.array([(b - a) / (c - 1) if c > 1 else 0.0 for a, b, c in zip(lo, hi, counts)])
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1), spacing


@dataclass(eq=False)
class FlowMap:
    seeds: np.ndarray  # (S, n)
    counts: Tuple[int, ...]
    spacing: np.ndarray
    times: np.ndarray  # (K+1,)
    X: np.ndarray  # (K+1, S, n)
    P: np.ndarray  # (K+1, S, n)
    U: np.ndarray  # (K+1, S)
    dt: float
    jacobian: np.ndarray = field(init=False)  # (K+1, S)
    _triangulations: Dict[int, Delaunay] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        self.jacobian = np.stack([jacobian_determinants(self.X[k], self.counts, self.spacing) for k in range(len(self.times))])

    @property
    def n(self) -> int:
        return self.seeds.shape[1]

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def caustic_index(self) -> Optional[int]:
        """First stamp where the flow stops being invertible, None if it stays invertible."""
        cfg = get_solver_config().characteristics
        det_threshold = float(cfg["det_threshold"])
        factor = float(cfg["collision_factor"])
        for k in range(len(self.times)):
            if np.any(self.jacobian[k] <= det_threshold):
                return k
            if _adjacent_collision(self.X[k], self.counts, factor * self.spacing):
                return k
        return None

    def caustic_time(self) -> float:
        k = self.caustic_index()
        return self.horizon if k is None else float(self.times[k])

    def _triangulation(self, k: int) -> Delaunay:
        if k not in self._triangulations:
            try:
                self._triangulations[k] = Delaunay(self.X[k])
            except QhullError as e:
                raise ExtrapolationError(f"deformed seed grid is degenerate at t={self.times[k]:g}: {e}") from None
        return self._triangulations[k]

    def value_on_stamp(self, k: int, x: np.ndarray) -> float:
        """Piecewise-linear U over the deformed grid at stamp k."""
        points, values = self.X[k], self.U[k]
        if self.n == 1:
            xs = points[:, 0]
            order = np.argsort(xs, kind="stable")
            xs, vs = xs[order], values[order]
            if not xs[0] - 1e-12 <= x[0] <= xs[-1] + 1e-12:
                raise ExtrapolationError(f"x={x[0]:g} outside [{xs[0]:g}, {xs[-1]:g}] at t={self.times[k]:g}")
            return float(np.interp(x[0], xs, vs))

        tri = self._triangulation(k)
        simplex = int(tri.find_simplex(x[None, :], tol=1e-12)[0])
        if simplex < 0:
            raise ExtrapolationError(f"x={x.tolist()} outside the deformed seed hull at t={self.times[k]:g}")
        T = tri.transform[simplex]
        b = T[: self.n].dot(x - T[self.n])
        weights = np.append(b, 1.0 - b.sum())
        return float(weights @ values[tri.simplices[simplex]])


def jacobian_determinants(X: np.ndarray, counts: Sequence[int], spacing: np.ndarray) -> np.ndarray:
    """det dX/dz per seed by finite differences along each grid axis (central inside, one-sided at edges)."""
    n = X.shape[1]
    shape = tuple(counts)
    grid = X.reshape(shape + (n,))
    J = np.empty(shape + (n, n))
    for axis in range(n):
        if shape[axis] < 2:
            J[..., :, axis] = np.eye(n)[:, axis]
            continue
        J[..., :, axis] = np.gradient(grid, spacing[axis], axis=axis)
    return np.linalg.det(J.reshape(-1, n, n))


def _adjacent_collision(X: np.ndarray, counts: Sequence[int], limits: np.ndarray) -> bool:
    n = X.shape[1]
    grid = X.reshape(tuple(counts) + (n,))
    for axis in range(n):
        if counts[axis] < 2:
            continue
        gaps = np.linalg.norm(np.diff(grid, axis=axis), axis=-1)
        if np.any(gaps < limits[axis]):
            return True
    return False


def build_flow_map(
    prob: ControlProblem,
    u0: Expr,
    lo: Sequence[float],
    hi: Sequence[float],
    counts: Sequence[int],
    T: float,
    dt: float,
    threads: int = 1,
) -> FlowMap:
    Z, spacing = seed_grid(lo, hi, counts)
    P0, U0 = initial_costate(prob, u0, Z)

    def run(rows: np.ndarray):
        return integrate_rows(prob, Z[rows], P0[rows], U0[rows], T, dt)

    chunks = map_row_chunks(run, len(Z), threads)
    times, step = chunks[0][0], chunks[0][2]
    Y = np.concatenate([c[1] for c in chunks], axis=1)
    n = prob.n
    logger.debug(f"Flow map: {len(Z)} seeds, {len(times)} stamps, dt={step:g}")
    return FlowMap(Z, tuple(int(c) for c in counts), spacing, times, Y[:, :, :n], Y[:, :, n : 2 * n], Y[:, :, 2 * n], step)


def caustic_time(
    prob: ControlProblem,
    u0: Expr,
    lo: Sequence[float],
    hi: Sequence[float],
    counts: Sequence[int],
    T: float,
    dt: float,
    threads: int = 1,
) -> float:
    if any(c < 3 for c in counts):
        raise SpecError("caustic detection needs at least 3 seeds per dimension")
    return build_flow_map(prob, u0, lo, hi, counts, T, dt, threads).caustic_time()


def reconstruct_solution(flow: FlowMap, t: float, x) -> float:
    """u(t, x) = U(t, Z(t, x)), linear in time between stamps."""
    x = np.asarray(x, dtype=float)
    if x.shape != (flow.n,):
        raise SpecError(f"query point must have {flow.n} components")
    limit = flow.caustic_time()
    if t < 0 or t > flow.horizon + 1e-12:
        raise ExtrapolationError(f"t={t:g} outside [0, {flow.horizon:g}]")
    if t > limit + 1e-12:
        raise ExtrapolationError(f"t={t:g} is past the caustic time {limit:g}")

    k = int(np.searchsorted(flow.times, t, side="right")) - 1
    k = min(max(k, 0), len(flow.times) - 1)
    if k == len(flow.times) - 1 or abs(flow.times[k] - t) <= 1e-12:
        return flow.value_on_stamp(k, x)
    w = (t - flow.times[k]) / (flow.times[k + 1] - flow.times[k])
    return (1 - w) * flow.value_on_stamp(k, x) + w * flow.value_on_stamp(k + 1, x)

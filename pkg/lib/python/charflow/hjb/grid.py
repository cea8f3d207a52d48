"""Uniform state grids and time-stacked value arrays."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from charflow.errors import ExtrapolationError, SpecError


@dataclass(frozen=True)
class GridSpec:
    lo: Tuple[float, ...]
    hi: Tuple[float, ...]
    nodes: Tuple[int, ...]

    def __post_init__(self):
        if not (len(self.lo) == len(self.hi) == len(self.nodes)):
            raise SpecError("grid bounds and node counts must have one entry per state")
        if not 1 <= len(self.nodes) <= 2:
            raise SpecError(f"value grids support 1 or 2 state dimensions, got {len(self.nodes)}")
        for a, b, c in zip(self.lo, self.hi, self.nodes):
            if c < 3:
                raise SpecError(f"grid resolution must be at least 3 nodes, got {c}")
            if not (np.isfinite(a) and np.isfinite(b) and a < b):
                raise SpecError(f"grid axis [{a}, {b}] must be finite and non-empty")

    @classmethod
    def over(cls, lo: Sequence[float], hi: Sequence[float], nodes: Sequence[int]) -> "GridSpec":
        return cls(tuple(float(v) for v in lo), tuple(float(v) for v in hi), tuple(int(c) for c in nodes))

    @classmethod
    def with_spacing(cls, lo: Sequence[float], hi: Sequence[float], h: float) -> "GridSpec":
        counts = [int(round((b - a) / h)) + 1 for a, b in zip(lo, hi)]
        return cls.over(lo, hi, counts)

    @property
    def dim(self) -> int:
        return len(self.nodes)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.nodes)

    @property
    def size(self) -> int:
        return int(np.prod(self.nodes))

    @property
    def axes(self) -> List[np.ndarray]:
        return [np.linspace(a, b, c) for a, b, c in zip(self.lo, self.hi, self.nodes)]

    @property
    def spacing(self) -> np.ndarray:
        return np.array([(b - a) / (c - 1) for a, b, c in zip(self.lo, self.hi, self.nodes)])

    @property
    def h(self) -> float:
        return float(np.min(self.spacing))

    def points(self) -> np.ndarray:
        """Node coordinates, shape (size, dim), 'ij' order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    def node_index(self, x: Sequence[float], tol: float = 1e-9) -> Tuple[int, ...]:
        """Multi-index of the node at x; raises when x is not a node."""
        x = np.asarray(x, dtype=float)
        rel = (x - np.asarray(self.lo)) / self.spacing
        idx = np.rint(rel).astype(int)
        if np.any(np.abs(rel - idx) > tol) or np.any(idx < 0) or np.any(idx >= np.asarray(self.nodes)):
            raise SpecError(f"point {x.tolist()} is not a grid node")
        return tuple(int(i) for i in idx)

    def contains(self, x: Sequence[float], tol: float = 1e-12) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= np.asarray(self.lo) - tol) and np.all(x <= np.asarray(self.hi) + tol))


@dataclass(eq=False)
class ValueGrid:
    grid: GridSpec
    times: np.ndarray  # (K+1,)
    values: np.ndarray  # (K+1, *grid.shape)
    dt: float
    t_start: float = 0.0
    _interpolators: Dict[int, RegularGridInterpolator] = field(default_factory=dict, init=False, repr=False)

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]

    def slice_at(self, t: float) -> np.ndarray:
        k = int(round((t - self.times[0]) / self.dt)) if self.dt > 0 else 0
        if not 0 <= k < len(self.times) or abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise SpecError(f"t={t:g} is not a stored time stamp")
        return self.values[k]

    def _interpolator(self, k: int) -> RegularGridInterpolator:
        if k not in self._interpolators:
            self._interpolators[k] = RegularGridInterpolator(tuple(self.grid.axes), self.values[k], method="linear")
        return self._interpolators[k]

    def value_at(self, t: float, x: Sequence[float]) -> float:
        """Multilinear in space, linear in time."""
        x = np.asarray(x, dtype=float)
        if not self.grid.contains(x):
            raise ExtrapolationError(f"x={x.tolist()} lies outside the value grid")
        t0, t1 = float(self.times[0]), float(self.times[-1])
        if not t0 - 1e-12 <= t <= t1 + 1e-12:
            raise ExtrapolationError(f"t={t:g} outside [{t0:g}, {t1:g}]")
        x = np.clip(x, self.grid.lo, self.grid.hi)
        if self.steps == 0:
            return float(self._interpolator(0)(x[None, :])[0])
        s = min(max((t - t0) / self.dt, 0.0), float(self.steps))
        k = min(int(np.floor(s)), self.steps - 1)
        w = s - k
        v0 = float(self._interpolator(k)(x[None, :])[0])
        if w <= 1e-12:
            return v0
        return (1 - w) * v0 + w * float(self._interpolator(k + 1)(x[None, :])[0])


def sample_on_grid(expr, grid: GridSpec) -> np.ndarray:
    """Evaluate an x-only expression on every node, shaped like the grid."""
    if expr.depends_on("u") or expr.depends_on("t"):
        raise SpecError("initial data may depend on x only")
    if expr.n != grid.dim:
        raise SpecError(f"initial data declared over {expr.n} states, grid has {grid.dim}")
    pts = grid.points()
    values = expr.vector(list(pts.T), [np.zeros(len(pts))] * expr.m, 0.0, (len(pts),))
    return np.array(values, dtype=float).reshape(grid.shape)


def coerce_initial(phi0, grid: GridSpec) -> np.ndarray:
    if isinstance(phi0, np.ndarray):
        if phi0.shape != grid.shape:
            raise SpecError(f"initial grid values have shape {phi0.shape}, expected {grid.shape}")
        if not np.all(np.isfinite(phi0)):
            raise SpecError("initial grid values must be finite")
        return phi0.astype(float, copy=True)
    return sample_on_grid(phi0, grid)


def default_grid(prob, nodes: Optional[Sequence[int]] = None, h: Optional[float] = None) -> GridSpec:
    if h is not None:
        return GridSpec.with_spacing(prob.domain.lo, prob.domain.hi, h)
    if nodes is None:
        raise SpecError("grid needs either node counts or a spacing")
    return GridSpec.over(prob.domain.lo, prob.domain.hi, nodes)

"""Exact transportation LP by the primal network simplex.

Nodes are the I source atoms (rows) and J target atoms (columns); a basis is a
spanning tree of I + J - 1 arcs. Tree potentials satisfy
    phi1[j] - phi0[i] = C[i, j]   on basic arcs,   phi0[0] = 0,
and an arc enters when its reduced cost C[i, j] - (phi1[j] - phi0[i]) is negative.
Entering and leaving arcs follow Bland's rule (lowest arc index i * J + j).

Forbidden (infinite-cost) arcs are handled in two phases: phase one minimises
the mass on forbidden arcs from a northwest-corner basis; phase two never lets
them enter, and a forbidden arc still in the basis blocks every cycle through
it at step zero so it leaves without carrying mass.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from charflow.config.settings import get_solver_config
from charflow.errors import InfeasibleTransportError, NotConvergedError, SpecError, UnbalancedMeasuresError

from .measures import DiscreteMeasure

logger = logging.getLogger("charflow.transport")

MASS_TOL = 1e-9

Arc = Tuple[int, int]


@dataclass(eq=False)
class TransportPlan:
    gamma: np.ndarray  # (I, J)
    objective: float
    costs: np.ndarray  # (I, J), inf on forbidden arcs
    basis: List[Arc] = field(default_factory=list)
    tree_phi0: Optional[np.ndarray] = None
    tree_phi1: Optional[np.ndarray] = None
    pivots: int = 0

    @property
    def shape(self) -> Tuple[int, int]:
        return self.gamma.shape

    @property
    def support(self) -> np.ndarray:
        return self.gamma > 1e-12

    def row_marginal(self) -> np.ndarray:
        return self.gamma.sum(axis=1)

    def column_marginal(self) -> np.ndarray:
        return self.gamma.sum(axis=0)


def cost_values(C) -> np.ndarray:
    values = C.values if hasattr(C, "values") and not isinstance(C, np.ndarray) else C
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise SpecError("cost matrix must be two-dimensional")
    if np.any(np.isnan(values)) or np.any(values == -np.inf):
        raise SpecError("cost matrix entries must be finite or +inf")
    return values


class _Simplex:
    def __init__(self, supply: np.ndarray, demand: np.ndarray, allowed: np.ndarray):
        self.a = supply
        self.b = demand
        self.I, self.J = allowed.shape
        self.allowed = allowed
        self.flow = np.zeros((self.I, self.J))
        self.basic = np.zeros((self.I, self.J), dtype=bool)
        self.pivots = 0

    # Basis construction

    def northwest_corner(self, row_order: np.ndarray, col_order: np.ndarray) -> None:
        a, b = self.a[row_order].copy(), self.b[col_order].copy()
        p = q = 0
        while True:
            i, j = row_order[p], col_order[q]
            x = min(a[p], b[q])
            self.flow[i, j] = max(x, 0.0)
            self.basic[i, j] = True
            a[p] -= x
            b[q] -= x
            if p == self.I - 1 and q == self.J - 1:
                break
            if q == self.J - 1 or (p < self.I - 1 and a[p] <= b[q]):
                p += 1
            else:
                q += 1

    # Tree helpers

    def _adjacency(self) -> Dict[int, List[int]]:
        """Node ids: row i -> i, column j -> I + j."""
        adj: Dict[int, List[int]] = {v: [] for v in range(self.I + self.J)}
        for i, j in zip(*np.nonzero(self.basic)):
            adj[int(i)].append(self.I + int(j))
            adj[self.I + int(j)].append(int(i))
        return adj

    def potentials(self, costs: np.ndarray, adj: Dict[int, List[int]]) -> Tuple[np.ndarray, np.ndarray]:
        phi0 = np.full(self.I, np.nan)
        phi1 = np.full(self.J, np.nan)
        phi0[0] = 0.0
        queue = deque([0])
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if v < self.I:
                    j = w - self.I
                    if np.isnan(phi1[j]):
                        phi1[j] = phi0[v] + costs[v, j]
                        queue.append(w)
                else:
                    i = w
                    if np.isnan(phi0[i]):
                        phi0[i] = phi1[v - self.I] - costs[i, v - self.I]
                        queue.append(w)
        if np.any(np.isnan(phi0)) or np.any(np.isnan(phi1)):
            raise NotConvergedError("network simplex basis is not a spanning tree")
        return phi0, phi1

    def _tree_path(self, adj: Dict[int, List[int]], start: int, goal: int) -> List[int]:
        parent = {start: -1}
        queue = deque([start])
        while queue:
            v = queue.popleft()
            if v == goal:
                break
            for w in adj[v]:
                if w not in parent:
                    parent[w] = v
                    queue.append(w)
        path = [goal]
        while path[-1] != start:
            path.append(parent[path[-1]])
        return path  # goal ... start

    def _arc(self, u: int, v: int) -> Arc:
        return (u, v - self.I) if u < self.I else (v, u - self.I)

    # Pivoting

    def run(self, costs: np.ndarray, enter_mask: np.ndarray, blockers: np.ndarray, tol: float, max_pivots: int):
        """Pivot to optimality. enter_mask marks arcs allowed to enter; blockers are basic arcs that must leave at zero step."""
        while True:
            adj = self._adjacency()
            phi0, phi1 = self.potentials(costs, adj)
            reduced = costs - (phi1[None, :] - phi0[:, None])
            candidates = enter_mask & ~self.basic & (reduced < -tol)
            if not candidates.any():
                return phi0, phi1
            if self.pivots >= max_pivots:
                raise NotConvergedError(f"network simplex exceeded {max_pivots} pivots")
            flat = int(np.argmax(candidates.ravel()))
            i, j = divmod(flat, self.J)
            self._pivot(adj, i, j, blockers)
            self.pivots += 1

    def evict_forbidden(self, costs: np.ndarray) -> bool:
        """Swap one zero-flow forbidden basic arc for the allowed arc of least reduced cost across its cut.

        Returns False when no forbidden arc can be swapped out. Reduced costs stay
        non-negative: shifting the cut-off subtree by that arc's reduced cost keeps
        every other crossing arc admissible.
        """
        adj = self._adjacency()
        phi0, phi1 = self.potentials(costs, adj)
        reduced = costs - (phi1[None, :] - phi0[:, None])
        for i, j in zip(*np.nonzero(self.basic & ~self.allowed)):
            i, j = int(i), int(j)
            adj[i].remove(self.I + j)
            adj[self.I + j].remove(i)
            side = self._component(adj, i)
            adj[i].append(self.I + j)
            adj[self.I + j].append(i)
            rows = np.zeros(self.I, dtype=bool)
            cols = np.zeros(self.J, dtype=bool)
            for v in side:
                if v < self.I:
                    rows[v] = True
                else:
                    cols[v - self.I] = True
            crossing = self.allowed & ~self.basic & (rows[:, None] != cols[None, :])
            if not crossing.any():
                continue
            score = np.where(crossing, reduced, np.inf)
            k, l = divmod(int(np.argmin(score.ravel())), self.J)
            self.basic[i, j] = False
            self.flow[i, j] = 0.0
            self.basic[k, l] = True
            return True
        return False

    def _component(self, adj: Dict[int, List[int]], start: int) -> set:
        seen = {start}
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return seen

    def _pivot(self, adj, i: int, j: int, blockers: np.ndarray) -> None:
        # cycle: entering arc i -> j, then the tree path from column j back to row i
        path = self._tree_path(adj, i, self.I + j)
        arcs = [self._arc(path[k], path[k + 1]) for k in range(len(path) - 1)]
        decreasing = arcs[0::2]
        increasing = arcs[1::2]

        blocked = [arc for arc in arcs if blockers[arc]]
        if blocked:
            theta = 0.0
            leaving = min(blocked, key=lambda arc: arc[0] * self.J + arc[1])
        else:
            theta = min(self.flow[arc] for arc in decreasing)
            ties = [arc for arc in decreasing if self.flow[arc] <= theta + MASS_TOL * 1e-3]
            leaving = min(ties, key=lambda arc: arc[0] * self.J + arc[1])

        if theta > 0:
            self.flow[i, j] += theta
            for arc in decreasing:
                self.flow[arc] = max(self.flow[arc] - theta, 0.0)
            for arc in increasing:
                self.flow[arc] += theta
        self.basic[i, j] = True
        self.basic[leaving] = False
        self.flow[leaving] = 0.0


def solve_mk(C, mu0: DiscreteMeasure, mu1: DiscreteMeasure) -> TransportPlan:
    costs = cost_values(C)
    I, J = costs.shape
    if (I, J) != (mu0.size, mu1.size):
        raise SpecError(f"cost matrix is {I}x{J} but measures have {mu0.size} and {mu1.size} atoms")
    if abs(mu0.weights.sum() - mu1.weights.sum()) > MASS_TOL:
        raise UnbalancedMeasuresError(f"source mass {mu0.weights.sum():.12g} differs from target mass {mu1.weights.sum():.12g}")

    allowed = np.isfinite(costs)
    if not allowed.any(axis=1).all() or not allowed.any(axis=0).all():
        raise InfeasibleTransportError("infeasible: some atom has no finite-cost arc")

    cfg = get_solver_config().transport
    finite = costs[allowed]
    tol = float(cfg["pivot_tol"]) * max(1.0, float(np.max(np.abs(finite))))
    max_pivots = 100_000 + 50 * I * J

    simplex = _Simplex(mu0.weights.copy(), mu1.weights.copy(), allowed)
    row_order = np.argsort(mu0.atoms[:, 0], kind="stable") if mu0.dim == 1 else np.arange(I)
    col_order = np.argsort(mu1.atoms[:, 0], kind="stable") if mu1.dim == 1 else np.arange(J)
    simplex.northwest_corner(row_order, col_order)

    no_blockers = np.zeros((I, J), dtype=bool)
    everything = np.ones((I, J), dtype=bool)
    if not allowed.all():
        phase1 = np.where(allowed, 0.0, 1.0)
        simplex.run(phase1, everything, no_blockers, 1e-12, max_pivots)
        stranded = float(simplex.flow[~allowed].sum())
        if stranded > MASS_TOL:
            raise InfeasibleTransportError(f"infeasible: forbidden arcs disconnect supply from demand ({stranded:.3g} mass stranded)")
        simplex.flow[~allowed] = 0.0
        logger.debug(f"Phase one finished after {simplex.pivots} pivots")

    phase2 = np.where(allowed, costs, 0.0)
    phi0, phi1 = simplex.run(phase2, allowed, simplex.basic & ~allowed, tol, max_pivots)
    # forbidden arcs left in the tree only tie together blocks with no allowed arc between them
    while simplex.evict_forbidden(phase2):
        phi0, phi1 = simplex.run(phase2, allowed, simplex.basic & ~allowed, tol, max_pivots)
    gamma = np.where(allowed, simplex.flow, 0.0)
    objective = float(np.sum(gamma[allowed] * costs[allowed]))
    basis = [(int(i), int(j)) for i, j in zip(*np.nonzero(simplex.basic))]
    logger.debug(f"Network simplex: {simplex.pivots} pivots, objective {objective:.12g}")
    return TransportPlan(gamma, objective, costs, basis, phi0, phi1, simplex.pivots)

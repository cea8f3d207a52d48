"""Kantorovich potentials, c-transforms and the optimality certificates.

Sign convention: a pair (phi0, phi1) is admissible when
phi1[j] - phi0[i] <= C[i, j] on every finite arc, and its dual value is
sum(phi1 * mu1) - sum(phi0 * mu0).
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from charflow.errors import SpecError

from .measures import DiscreteMeasure
from .network_simplex import TransportPlan, cost_values

logger = logging.getLogger("charflow.transport")

SUPPORT_MASS = 1e-12
SUPPORT_TOL = 1e-7
ADMISSIBLE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class KantorovichPair:
    phi0: np.ndarray
    phi1: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "phi0", np.asarray(self.phi0, dtype=float))
        object.__setattr__(self, "phi1", np.asarray(self.phi1, dtype=float))

    def shifted(self, k: float) -> "KantorovichPair":
        return KantorovichPair(self.phi0 + k, self.phi1 + k)

    def gauged(self) -> "KantorovichPair":
        """Shift both potentials so that phi0[0] == 0."""
        return self.shifted(-float(self.phi0[0]))

    def slack(self, C) -> np.ndarray:
        """C[i, j] - (phi1[j] - phi0[i]); inf on forbidden arcs."""
        costs = cost_values(C)
        return costs - (self.phi1[None, :] - self.phi0[:, None])


@dataclass
class SupportReport:
    max_violation: float
    admissibility_violation: float
    support_arcs: int
    worst_arc: Optional[tuple] = None

    @property
    def passed(self) -> bool:
        return self.max_violation <= SUPPORT_TOL and self.admissibility_violation <= ADMISSIBLE_TOL

    def to_dict(self) -> Dict:
        return {
            "max_violation": self.max_violation,
            "admissibility_violation": self.admissibility_violation,
            "support_arcs": self.support_arcs,
            "passed": self.passed,
        }


@dataclass
class PointwiseReport:
    cost: float
    best_dual: float
    slack: float
    on_support: bool
    values: List[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        if self.slack < -ADMISSIBLE_TOL:
            return False
        return not self.on_support or abs(self.slack) <= SUPPORT_TOL


def c_transform_forward(phi0, C) -> np.ndarray:
    """phi1[j] = min_i phi0[i] + C[i, j], forbidden arcs skipped."""
    costs = cost_values(C)
    phi0 = np.asarray(phi0, dtype=float)
    if not np.isfinite(costs).any(axis=0).all():
        raise SpecError("c-transform: some target atom has no finite arc")
    return np.min(phi0[:, None] + costs, axis=0)


def c_transform_backward(phi1, C) -> np.ndarray:
    """phi0[i] = max_j phi1[j] - C[i, j], forbidden arcs skipped."""
    costs = cost_values(C)
    phi1 = np.asarray(phi1, dtype=float)
    if not np.isfinite(costs).any(axis=1).all():
        raise SpecError("c-transform: some source atom has no finite arc")
    return np.max(phi1[None, :] - costs, axis=1)


def dual_potentials(plan: TransportPlan) -> KantorovichPair:
    """Tree potentials of the final basis, made c-concave and gauged."""
    if plan.tree_phi0 is None or plan.tree_phi1 is None:
        raise SpecError("plan carries no basis potentials")
    phi1 = c_transform_forward(plan.tree_phi0, plan.costs)
    phi0 = c_transform_backward(phi1, plan.costs)
    return KantorovichPair(phi0, phi1).gauged()


def _shortest_from_root(costs: np.ndarray, support: np.ndarray, reverse: bool) -> Optional[tuple]:
    """Bellman-Ford over the dual constraint graph.

    Arcs: row i -> column j with weight C[i, j] for finite arcs, column j -> row i with
    weight -C[i, j] on support arcs. With reverse=False distances are from row 0,
    otherwise distances to row 0. Returns None on a negative cycle or unreachable node.
    """
    I, J = costs.shape
    finite = np.isfinite(costs)
    forward_w = np.where(finite, costs, np.inf)
    back_w = np.where(support, -np.where(finite, costs, 0.0), np.inf)
    rows = np.full(I, np.inf)
    cols = np.full(J, np.inf)
    rows[0] = 0.0
    scale = max(1.0, float(np.max(np.abs(costs[finite]))))
    eps = 1e-12 * scale
    for _ in range(I + J + 1):
        if not reverse:
            new_cols = np.min(rows[:, None] + forward_w, axis=0)
            new_rows = np.minimum(rows, np.min(new_cols[None, :] + back_w, axis=1))
        else:
            new_cols = np.min(back_w + rows[:, None], axis=0)
            new_rows = np.minimum(rows, np.min(forward_w + new_cols[None, :], axis=1))
        new_rows[0] = min(new_rows[0], 0.0)
        changed = np.any(new_rows < rows - eps) or np.any(new_cols < cols - eps)
        rows, cols = new_rows, new_cols
        if not changed:
            if rows[0] < -eps or not (np.all(np.isfinite(rows)) and np.all(np.isfinite(cols))):
                return None
            return rows, cols
    return None


def central_potentials(plan: TransportPlan, C=None) -> KantorovichPair:
    """Midpoint of the largest and smallest optimal potentials with phi0[0] = 0.

    Falls back to the tree pair when the optimal face is unbounded or the
    shortest-path sweep does not settle.
    """
    costs = cost_values(C) if C is not None else plan.costs
    support = plan.gamma > SUPPORT_MASS
    upper = _shortest_from_root(costs, support, reverse=False)
    lower = _shortest_from_root(costs, support, reverse=True)
    if upper is None or lower is None:
        logger.debug("Central potentials unavailable, using tree potentials")
        return dual_potentials(plan)
    phi0 = 0.5 * (upper[0] - lower[0])
    phi1 = 0.5 * (upper[1] - lower[1])
    return KantorovichPair(phi0, phi1).gauged()


def kantorovich_total_cost(pair: KantorovichPair, mu0: DiscreteMeasure, mu1: DiscreteMeasure) -> float:
    return float(pair.phi1 @ mu1.weights - pair.phi0 @ mu0.weights)


def admissibility_violation(pair: KantorovichPair, C) -> float:
    slack = pair.slack(C)
    finite = np.isfinite(slack)
    if not finite.any():
        return 0.0
    return float(max(0.0, -np.min(slack[finite])))


def check_support_condition(plan: TransportPlan, pair: KantorovichPair, C=None) -> SupportReport:
    """Every arc carrying mass must be tight: phi1[j] - phi0[i] == C[i, j]."""
    costs = cost_values(C) if C is not None else plan.costs
    support = plan.gamma > SUPPORT_MASS
    slack = pair.slack(costs)
    worst, worst_arc = 0.0, None
    if support.any():
        gaps = np.where(support, np.abs(slack), 0.0)
        flat = int(np.argmax(gaps))
        worst = float(gaps.ravel()[flat])
        worst_arc = divmod(flat, costs.shape[1])
    return SupportReport(worst, admissibility_violation(pair, costs), int(support.sum()), worst_arc)


def pointwise_duality(
    i: int, j: int, pairs: Sequence[KantorovichPair], C, plan: Optional[TransportPlan] = None
) -> PointwiseReport:
    """c(x_i, y_j) >= max over pairs of phi1[j] - phi0[i], tight when (i, j) is in a support."""
    if not pairs:
        raise SpecError("pointwise duality needs at least one pair")
    costs = cost_values(C)
    values = [float(p.phi1[j] - p.phi0[i]) for p in pairs]
    best = max(values)
    cost = float(costs[i, j])
    on_support = bool(plan is not None and plan.gamma[i, j] > SUPPORT_MASS)
    return PointwiseReport(cost, best, cost - best, on_support, values)


def monge_plan_is_deterministic(plan: TransportPlan) -> bool:
    """True when every source atom sends all its mass to a single target atom."""
    return bool(np.all((plan.gamma > SUPPORT_MASS).sum(axis=1) == 1))


def extend_target_potential(pair: KantorovichPair, mu0: DiscreteMeasure, cost_fn: Callable, y) -> float:
    """phi1(y) = min_i phi0[i] + c(x_i, y) at an arbitrary target point."""
    y = np.asarray(y, dtype=float)
    return float(min(pair.phi0[i] + cost_fn(mu0.atoms[i], y) for i in range(mu0.size)))


def curve_in_section_set(
    prob,
    pair: KantorovichPair,
    mu0: DiscreteMeasure,
    x_index: int,
    trajectory,
    cost_fn: Callable,
    tol: float = 1e-6,
) -> bool:
    """Does the characteristic satisfy phi1(end) = phi0(start) + action along it?

    The action is the value carried by the characteristic (U at the end minus U at
    the start).
    """
    action = float(trajectory.U[-1] - trajectory.U[0])
    end = np.asarray(trajectory.X[-1], dtype=float)
    phi1_end = extend_target_potential(pair, mu0, cost_fn, end)
    gap = phi1_end - (float(pair.phi0[x_index]) + action)
    logger.debug(f"Section-set check at atom {x_index}: gap {gap:.3e}")
    return abs(gap) <= tol

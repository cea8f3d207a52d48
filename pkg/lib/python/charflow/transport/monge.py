"""Optimal map from the gradient of the source potential.

Off the atoms phi0 is extended by the envelope phi0(x) = max_j phi1[j] - c(x, y_j).
Where that envelope is differentiable its gradient is the initial costate of the
optimal curve leaving x, and flowing the characteristic system for unit time
lands on the image T(x).
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from charflow.characteristics import integrate_rows
from charflow.concurrency import parallel_map
from charflow.config.settings import get_solver_config
from charflow.errors import ExcessiveSkippedMassError, SpecError
from charflow.problem import ControlProblem

from .duality import KantorovichPair
from .measures import DiscreteMeasure
from .network_simplex import TransportPlan, cost_values

logger = logging.getLogger("charflow.transport")


@dataclass
class SectionResult:
    p0: Optional[np.ndarray]
    target: int  # argmax index at the atom
    differentiable: bool


@dataclass(eq=False)
class MongeMap:
    atoms: np.ndarray  # (I, n)
    p0: np.ndarray  # (I, n), nan where skipped
    images: np.ndarray  # (I, n)
    weights: np.ndarray  # (I,)
    accepted: np.ndarray  # (I,) bool
    assignment: np.ndarray  # (I,) envelope argmax target
    actions: np.ndarray  # (I,) value gained along the curve, nan where skipped

    @property
    def skipped_mass(self) -> float:
        return float(self.weights[~self.accepted].sum())

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        hits = np.nonzero(np.all(np.abs(self.atoms - x) <= 1e-12, axis=1))[0]
        if len(hits) == 0:
            raise SpecError(f"{x.tolist()} is not a source atom")
        return self.images[hits[0]]


def candidate_targets(pair: KantorovichPair, C, i: int, count: int) -> np.ndarray:
    """Indices of the `count` largest phi1[j] - C[i, j]; ties keep the lower index first."""
    scores = pair.phi1 - cost_values(C)[i]
    finite = np.nonzero(np.isfinite(scores))[0]
    order = finite[np.argsort(-scores[finite], kind="stable")]
    return order[:count]


def _envelope(pair: KantorovichPair, targets: np.ndarray, candidates: np.ndarray, cost_fn: Callable, x) -> Tuple[float, int]:
    values = np.array([pair.phi1[j] - cost_fn(x, targets[j]) for j in candidates])
    if not np.any(np.isfinite(values)):
        return -np.inf, -1
    k = int(np.argmax(values))
    return float(values[k]), int(candidates[k])


def monge_section(
    pair: KantorovichPair,
    targets: np.ndarray,
    candidates: np.ndarray,
    cost_fn: Callable,
    x,
    h: float,
) -> SectionResult:
    """Central-difference gradient of the envelope at x; flagged when the argmax moves across the stencil."""
    x = np.asarray(x, dtype=float)
    _, centre = _envelope(pair, targets, candidates, cost_fn, x)
    if centre < 0:
        return SectionResult(None, -1, False)
    grad = np.empty(len(x))
    for k in range(len(x)):
        step = np.zeros(len(x))
        step[k] = h
        up, j_up = _envelope(pair, targets, candidates, cost_fn, x + step)
        down, j_down = _envelope(pair, targets, candidates, cost_fn, x - step)
        if j_up != centre or j_down != centre or not (np.isfinite(up) and np.isfinite(down)):
            return SectionResult(None, centre, False)
        grad[k] = (up - down) / (2 * h)
    return SectionResult(grad, centre, True)


def monge_map(
    prob: ControlProblem,
    mu0: DiscreteMeasure,
    mu1: DiscreteMeasure,
    pair: KantorovichPair,
    C,
    cost_fn: Callable,
    plan: Optional[TransportPlan] = None,
    dt: float = 0.01,
    threads: int = 1,
    horizon: float = 1.0,
) -> MongeMap:
    """Flow every differentiable atom from (x, grad phi0(x)) over [0, horizon].

    Atoms where the envelope is not differentiable are skipped. Their image is the
    barycentre of their plan row (or the envelope argmax without a plan), which only
    skipped_action reads; pushforward and initial_measure_action leave them out.
    Raises ExcessiveSkippedMassError above the configured skipped-mass share.
    """
    if mu0.dim != prob.n or mu1.dim != prob.n:
        raise SpecError(f"measures live in dimension {mu0.dim}/{mu1.dim}, problem state has {prob.n}")
    cfg = get_solver_config().transport
    h = float(cfg["stencil_fraction"]) * float(np.max(prob.domain.width))
    count = int(cfg["candidate_arcs"])
    costs = cost_values(C)

    def section(i: int) -> SectionResult:
        return monge_section(pair, mu1.atoms, candidate_targets(pair, costs, i, count), cost_fn, mu0.atoms[i], h)

    sections: List[SectionResult] = parallel_map(section, list(range(mu0.size)), threads, desc="Monge section")
    accepted = np.array([s.differentiable for s in sections])
    skipped_mass = float(mu0.weights[~accepted].sum())
    limit = float(cfg["max_skipped_mass"])
    if skipped_mass > limit:
        raise ExcessiveSkippedMassError(skipped_mass, limit)
    if skipped_mass > 0:
        logger.warning(f"Monge section skipped {int((~accepted).sum())} atoms carrying mass {skipped_mass:.3g}")

    n = prob.n
    p0 = np.full((mu0.size, n), np.nan)
    images = np.empty((mu0.size, n))
    actions = np.full(mu0.size, np.nan)
    assignment = np.array([s.target for s in sections])
    rows = np.nonzero(accepted)[0]
    if len(rows):
        p0[rows] = np.array([sections[i].p0 for i in rows])
        _, Y, _ = integrate_rows(prob, mu0.atoms[rows], p0[rows], np.zeros(len(rows)), horizon, dt)
        images[rows] = prob.wrap(Y[-1, :, :n])
        actions[rows] = Y[-1, :, 2 * n]
    for i in np.nonzero(~accepted)[0]:
        if plan is not None:
            row = plan.gamma[i]
            images[i] = row @ mu1.atoms / row.sum()
        else:
            images[i] = mu1.atoms[max(assignment[i], 0)]
    logger.debug(f"Monge map: {len(rows)} of {mu0.size} atoms flowed")
    return MongeMap(mu0.atoms.copy(), p0, images, mu0.weights.copy(), accepted, assignment, actions)


def _weighted_cost(mapping: MongeMap, cost_fn: Callable, rows: np.ndarray) -> float:
    return float(sum(mapping.weights[i] * cost_fn(mapping.atoms[i], mapping.images[i]) for i in rows))


def initial_measure_action(mapping: MongeMap, cost_fn: Callable) -> float:
    """Sum of w_i * c(x_i, T(x_i)) over the flowed atoms."""
    return _weighted_cost(mapping, cost_fn, np.nonzero(mapping.accepted)[0])


def skipped_action(mapping: MongeMap, cost_fn: Callable) -> float:
    """Cost of sending the skipped atoms to their plan barycentres."""
    return _weighted_cost(mapping, cost_fn, np.nonzero(~mapping.accepted)[0])


def plan_images(plan: TransportPlan, mu1: DiscreteMeasure) -> np.ndarray:
    """Barycentric image of every source row of a plan."""
    rows = plan.gamma.sum(axis=1)
    return plan.gamma @ mu1.atoms / rows[:, None]

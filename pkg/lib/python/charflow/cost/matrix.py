"""Cost matrices over point sets, one independent query per entry."""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from charflow.concurrency import parallel_map
from charflow.errors import CharflowNumericalError, CharflowUserError, SpecError
from charflow.models import CostMethod, CostStatus
from charflow.problem import ControlProblem

from .oracle import cost_dp_oracle
from .shooting import cost_shooting
from .transcription import cost_transcription
from .types import CostQuery, CostResult

logger = logging.getLogger("charflow.cost")

POLICIES = ("shooting", "transcription", "oracle", "closed_form")

CostEvaluator = Callable[[np.ndarray, np.ndarray], float]


@dataclass(eq=False)
class CostMatrix:
    xs: np.ndarray  # (I, n)
    ys: np.ndarray  # (J, n)
    values: np.ndarray  # (I, J), math.inf where infeasible
    status: np.ndarray  # (I, J) of CostStatus
    policy: str = "shooting"

    @property
    def shape(self):
        return self.values.shape

    @property
    def allowed(self) -> np.ndarray:
        """Arcs usable by the transport solver."""
        return np.isfinite(self.values)

    @property
    def failures(self) -> List[tuple]:
        return [(i, j, self.status[i, j]) for i, j in zip(*np.nonzero(self.status != CostStatus.OK))]

    @classmethod
    def from_values(cls, values, xs=None, ys=None) -> "CostMatrix":
        values = np.asarray(values, dtype=float)
        I, J = values.shape
        xs = np.arange(I, dtype=float)[:, None] if xs is None else np.atleast_2d(np.asarray(xs, dtype=float).reshape(I, -1))
        ys = np.arange(J, dtype=float)[:, None] if ys is None else np.atleast_2d(np.asarray(ys, dtype=float).reshape(J, -1))
        status = np.where(np.isfinite(values), CostStatus.OK, CostStatus.INFEASIBLE).astype(object)
        return cls(xs, ys, values, status, policy="given")


def closed_form_quadratic(t1: float = 1.0) -> CostEvaluator:
    """|x - y|^2 / (2 t1), the exact cost of f = u, L = |u|^2/2, U = R^n."""
    return lambda x, y: float(np.sum((np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) ** 2) / (2.0 * t1))


def cost_query(
    prob: ControlProblem,
    q: CostQuery,
    policy: str = "shooting",
    transcription_intervals: int = 50,
    oracle_h: Optional[float] = None,
) -> CostResult:
    if policy == "shooting":
        return cost_shooting(prob, q, fallback=True, transcription_intervals=transcription_intervals)
    if policy == "transcription":
        return cost_transcription(prob, q, transcription_intervals)
    if policy == "oracle":
        return cost_dp_oracle(prob, q, h=oracle_h)
    if policy == "closed_form":
        if not prob.is_quadratic_family:
            raise SpecError("closed-form cost applies only to f = u, L = |u|^2/2 with unbounded controls")
        return CostResult(closed_form_quadratic(q.duration)(q.x, q.y), CostMethod.SHOOTING, CostStatus.OK)
    raise SpecError(f"unknown cost policy {policy!r} (choose from {', '.join(POLICIES)})")


def cost_function(prob: ControlProblem, policy: str = "shooting", t1: float = 1.0, **kwargs) -> CostEvaluator:
    """c(x, y) as a plain callable; math.inf for anything but a converged value."""

    def evaluate(x, y) -> float:
        result = cost_query(prob, CostQuery(x, y, 0.0, t1), policy, **kwargs)
        return result.value if result.ok else math.inf

    return evaluate


def cost_matrix(
    prob: ControlProblem,
    xs: Sequence,
    ys: Sequence,
    policy: str = "shooting",
    t1: float = 1.0,
    threads: int = 1,
    transcription_intervals: int = 50,
    oracle_h: Optional[float] = None,
) -> CostMatrix:
    xs = np.atleast_2d(np.asarray(xs, dtype=float).reshape(len(xs), -1))
    ys = np.atleast_2d(np.asarray(ys, dtype=float).reshape(len(ys), -1))
    if policy not in POLICIES:
        raise SpecError(f"unknown cost policy {policy!r} (choose from {', '.join(POLICIES)})")
    pairs = [(i, j) for i in range(len(xs)) for j in range(len(ys))]

    def entry(pair) -> CostResult:
        i, j = pair
        try:
            return cost_query(prob, CostQuery(xs[i], ys[j], 0.0, t1), policy, transcription_intervals, oracle_h)
        except (CharflowNumericalError, CharflowUserError) as e:
            logger.warning(f"Cost entry ({i}, {j}) failed: {e}")
            return CostResult.failed(CostMethod(policy) if policy != "closed_form" else CostMethod.SHOOTING, CostStatus.ERROR, str(e))

    results = parallel_map(entry, pairs, threads, desc="Cost matrix")
    values = np.full((len(xs), len(ys)), math.inf)
    status = np.empty((len(xs), len(ys)), dtype=object)
    for (i, j), r in zip(pairs, results):
        status[i, j] = r.status
        if r.ok:
            values[i, j] = r.value
        elif r.status is not CostStatus.INFEASIBLE:
            logger.warning(f"Cost entry ({i}, {j}) is {r.status.value}; arc will be forbidden ({r.message})")
    return CostMatrix(xs, ys, values, status, policy)

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from charflow.errors import SpecError
from charflow.models import CostMethod, CostStatus


@dataclass(frozen=True, eq=False)
class CostQuery:
    x: np.ndarray
    y: np.ndarray
    t0: float = 0.0
    t1: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "y", np.atleast_1d(np.asarray(self.y, dtype=float)))
        if self.x.shape != self.y.shape:
            raise SpecError("cost endpoints must have the same dimension")
        if not self.t0 < self.t1:
            raise SpecError(f"cost horizon needs t0 < t1, got [{self.t0}, {self.t1}]")

    @property
    def duration(self) -> float:
        return self.t1 - self.t0


@dataclass(eq=False)
class CostResult:
    """Control cost of one query. value is math.inf unless status is OK (or NOT_CONVERGED with a best effort)."""

    value: float
    method: CostMethod
    status: CostStatus = CostStatus.OK
    trajectory: Optional[np.ndarray] = None  # (K+1, n)
    times: Optional[np.ndarray] = None
    p0: Optional[np.ndarray] = None
    terminal_gap: float = 0.0
    message: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status is CostStatus.OK

    @property
    def infeasible(self) -> bool:
        return self.status is CostStatus.INFEASIBLE

    @classmethod
    def failed(cls, method: CostMethod, status: CostStatus, message: str, gap: float = math.inf) -> "CostResult":
        return cls(math.inf, method, status, terminal_gap=gap, message=message)

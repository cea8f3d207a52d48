from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Tuple

import numpy as np


class Boundary(Enum):
    CLAMP = "clamp"
    PERIODIC = "periodic"


class CostMethod(Enum):
    SHOOTING = "shooting"
    TRANSCRIPTION = "transcription"
    ORACLE = "oracle"


class CostStatus(Enum):
    OK = "ok"
    INFEASIBLE = "infeasible"
    NOT_CONVERGED = "not_converged"
    ERROR = "error"


class HamiltonianBranch(Enum):
    CLOSED_FORM = "closed_form"
    NUMERIC = "numeric"


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lo_i, hi_i]; components may be infinite."""

    lo: Tuple[float, ...]
    hi: Tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or not self.lo:
            raise ValueError("box bounds must be non-empty and of equal length")
        for lo, hi in zip(self.lo, self.hi):
            if not lo <= hi:
                raise ValueError(f"box bound lo={lo} exceeds hi={hi}")

    @classmethod
    def of(cls, lo: Sequence[float], hi: Sequence[float]) -> "Box":
        return cls(tuple(float(v) for v in lo), tuple(float(v) for v in hi))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.lo, dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.hi, dtype=float)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def component_bounded(self, j: int) -> bool:
        return bool(np.isfinite(self.lo[j]) and np.isfinite(self.hi[j]))

    def contains(self, point: Sequence[float], tol: float = 0.0) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))

    def clip(self, point: Sequence[float]) -> np.ndarray:
        return np.clip(np.asarray(point, dtype=float), self.lower, self.upper)

"""Numerical viscosity residual |D_t V + H(x, D_x V)| on a solved grid."""

import logging
from dataclasses import dataclass
from typing import Dict

import numpy as np
from scipy.ndimage import binary_dilation

from charflow.config.settings import get_solver_config
from charflow.problem import ControlProblem, hamiltonian_batch

from .grid import ValueGrid

logger = logging.getLogger("charflow.hjb")

KINK_NEIGHBOURHOOD = 3


@dataclass(frozen=True)
class ResidualReport:
    median: float
    p90: float
    max: float
    count: int
    excluded: int

    def to_dict(self) -> Dict:
        return {"median": self.median, "p90": self.p90, "max": self.max, "count": self.count, "excluded": self.excluded}


def kink_mask(V: np.ndarray, spacing: np.ndarray, threshold: float) -> np.ndarray:
    """Nodes within KINK_NEIGHBOURHOOD of a slope jump larger than threshold."""
    mask = np.zeros(V.shape, dtype=bool)
    for axis in range(V.ndim):
        second = np.abs(np.diff(V, n=2, axis=axis))
        kinks = second > threshold * spacing[axis]
        pad = [(0, 0)] * V.ndim
        pad[axis] = (1, 1)
        kinks = np.pad(kinks, pad)
        if not kinks.any():
            continue
        line = np.ones([3 if a == axis else 1 for a in range(V.ndim)], dtype=bool)
        mask |= binary_dilation(kinks, structure=line, iterations=KINK_NEIGHBOURHOOD)
    return mask


def _interior(shape) -> np.ndarray:
    inner = np.zeros(shape, dtype=bool)
    inner[tuple(slice(1, -1) for _ in shape)] = True
    return inner


def viscosity_residual(vg: ValueGrid, prob: ControlProblem) -> ResidualReport:
    threshold = float(get_solver_config().hjb["kink_threshold"])
    spacing = vg.grid.spacing
    nodes = vg.grid.points()
    inner = _interior(vg.grid.shape)

    residuals = []
    excluded = 0
    for k in range(1, vg.steps + 1):
        V = vg.values[k]
        if k + 1 <= vg.steps:
            Vt = (vg.values[k + 1] - vg.values[k - 1]) / (2 * vg.dt)
        else:
            Vt = (vg.values[k] - vg.values[k - 1]) / vg.dt
        grads = np.gradient(V, *spacing) if V.ndim > 1 else [np.gradient(V, spacing[0])]
        P = np.stack([g.ravel() for g in grads], axis=1)
        H = hamiltonian_batch(prob, nodes, P, float(vg.times[k])).value.reshape(V.shape)
        r = np.abs(Vt + H)
        keep = inner & ~kink_mask(V, spacing, threshold)
        excluded += int(np.count_nonzero(inner & ~keep))
        residuals.append(r[keep])

    values = np.concatenate(residuals) if residuals else np.zeros(0)
    if values.size == 0:
        return ResidualReport(0.0, 0.0, 0.0, 0, excluded)
    report = ResidualReport(
        float(np.median(values)),
        float(np.percentile(values, 90)),
        float(np.max(values)),
        int(values.size),
        excluded,
    )
    logger.debug(f"Viscosity residual: median={report.median:.3e}, p90={report.p90:.3e}, excluded={excluded}")
    return report

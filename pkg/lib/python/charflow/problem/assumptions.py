"""Monte-Carlo checks of the growth, Lipschitz and superlinearity assumptions.

The report is advisory: estimates come from random samples over the domain and
the clipped control box, and a flag is raised when an estimate keeps growing as
the sampling radius grows.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from charflow.errors import CharflowNumericalError, SpecError

from .control import ControlProblem

logger = logging.getLogger("charflow.problem")

CLIPPED_CONTROL_RADIUS = 10.0
GROWTH_RADII = (1.0, 10.0, 100.0)
SUPERLINEAR_RADII = (10.0, 100.0, 1000.0)
GROWTH_FACTOR = 2.0


@dataclass
class AssumptionReport:
    K0: float
    K1: float
    K2: float
    alpha_R: float
    lipschitz_u: float
    samples: int
    flags: List[str] = field(default_factory=list)
    notes: Dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.flags

    def to_dict(self) -> Dict:
        return {
            "K0": self.K0,
            "K1": self.K1,
            "K2": self.K2,
            "alpha_R": self.alpha_R,
            "lipschitz_u": self.lipschitz_u,
            "samples": self.samples,
            "passed": self.passed,
            "flags": list(self.flags),
            "notes": dict(self.notes),
        }


def _clipped_controls(prob: ControlProblem, radius: float):
    lo = np.array(prob.U.lo, dtype=float)
    hi = np.array(prob.U.hi, dtype=float)
    return np.maximum(lo, -radius), np.minimum(hi, radius)


def _f_rows(prob, X, U) -> np.ndarray:
    xs, us = list(X.T), list(U.T)
    return np.stack([fk.vector(xs, us, 0.0, (len(X),)) for fk in prob.f], axis=1)


def _fx_rows(prob, X, U) -> np.ndarray:
    xs, us = list(X.T), list(U.T)
    S = len(X)
    return np.stack(
        [np.stack([prob.f_x[k][i].vector(xs, us, 0.0, (S,)) for i in range(prob.n)], axis=1) for k in range(prob.n)],
        axis=1,
    )


def _sample_box(rng, lo, hi, count):
    return lo + (hi - lo) * rng.random((count, len(lo)))


def _ratio_max(num: np.ndarray, den: np.ndarray) -> float:
    mask = den > 1e-12
    return float(np.max(num[mask] / den[mask])) if np.any(mask) else 0.0


def _growth_estimates(prob, rng, samples, x_lo, x_hi):
    u_lo, u_hi = _clipped_controls(prob, CLIPPED_CONTROL_RADIUS)
    X1 = _sample_box(rng, x_lo, x_hi, samples)
    X2 = _sample_box(rng, x_lo, x_hi, samples)
    U = _sample_box(rng, u_lo, u_hi, samples)
    T = prob.horizon * rng.random(samples)

    F1, F2 = _f_rows(prob, X1, U), _f_rows(prob, X2, U)
    dx = np.linalg.norm(X2 - X1, axis=1)
    K0 = float(np.max(np.linalg.norm(F1, axis=1) / (1 + np.linalg.norm(X1, axis=1) + np.linalg.norm(U, axis=1))))
    K1 = _ratio_max(np.linalg.norm(F2 - F1, axis=1), dx)
    J1, J2 = _fx_rows(prob, X1, U), _fx_rows(prob, X2, U)
    K2 = _ratio_max(np.linalg.norm((J2 - J1).reshape(samples, -1), axis=1), dx)

    L1 = prob.L.vector(list(X1.T), list(U.T), T, (samples,))
    L2 = prob.L.vector(list(X2.T), list(U.T), T, (samples,))
    alpha = _ratio_max(np.abs(L2 - L1), dx)

    V = _sample_box(rng, u_lo, u_hi, samples)
    Lv = prob.L.vector(list(X1.T), list(V.T), T, (samples,))
    lip_u = _ratio_max(np.abs(Lv - L1), np.linalg.norm(V - U, axis=1))
    return K0, K1, K2, alpha, lip_u


def _superlinear_direction(prob: ControlProblem, j: int) -> bool:
    """Ratio test L/|u| along +-e_j at the domain centre, using the larger direction."""
    x = 0.5 * (prob.domain.lower + prob.domain.upper)
    ratios = []
    for r in SUPERLINEAR_RADII:
        best = -math.inf
        for sign in (1.0, -1.0):
            u = np.zeros(prob.m)
            u[j] = sign * r
            try:
                value = prob.L.scalar(x, u, 0.0)
            except CharflowNumericalError:
                value = math.inf
            best = max(best, value / r)
        ratios.append(best)
    return all(b > a for a, b in zip(ratios, ratios[1:]))


def check_assumptions(prob: ControlProblem, samples: int = 1000, seed: int = 0) -> AssumptionReport:
    if samples < 100:
        raise SpecError(f"check_assumptions needs at least 100 samples, got {samples}")
    rng = np.random.default_rng(seed)

    try:
        K0, K1, K2, alpha, lip_u = _growth_estimates(prob, rng, samples, prob.domain.lower, prob.domain.upper)
    except CharflowNumericalError as e:
        logger.warning(f"Assumption sampling hit a domain fault: {e}")
        report = AssumptionReport(math.inf, math.inf, math.inf, math.inf, math.inf, samples)
        report.flags.append(f"sampling fault: {e}")
        return report

    report = AssumptionReport(K0, K1, K2, alpha, lip_u, samples)
    report.notes["L3"] = "not checked"

    # Radius sweep: growth constants that keep increasing signal a violated bound.
    centre = 0.5 * (prob.domain.lower + prob.domain.upper)
    sweep = []
    try:
        for r in GROWTH_RADII:
            sweep.append(_growth_estimates(prob, rng, samples, centre - r, centre + r))
    except CharflowNumericalError as e:
        report.flags.append(f"sampling fault off the domain: {e}")
    if len(sweep) == len(GROWTH_RADII):
        for idx, name, label in ((0, "K0", "A1 growth"), (1, "K1", "A2 Lipschitz in x"), (2, "K2", "A3 Lipschitz of f_x")):
            values = [est[idx] for est in sweep]
            if values[-1] > GROWTH_FACTOR * max(values[0], 1e-12) and values[-1] > values[1] > values[0]:
                report.flags.append(f"{label}: {name} estimate grows with radius ({', '.join(f'{v:.3g}' for v in values)})")

    for j in range(prob.m):
        if math.isfinite(prob.U.lo[j]) and math.isfinite(prob.U.hi[j]):
            continue
        if not _superlinear_direction(prob, j):
            report.flags.append(f"L1 superlinearity: L/|u{j}| does not grow along the unbounded control u{j}")

    for flag in report.flags:
        logger.warning(f"Assumption advisory: {flag}")
    return report

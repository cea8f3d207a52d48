"""Cost by shooting on the initial costate.

Optimal trajectories follow the characteristic system, so c(x, y) is found by
integrating from (x, p0) and Newton-iterating p0 until X(t1) = y. The running
cost is carried by the value channel U' = P . H_p - H = L(X, u*), started at 0.
All starts and finite-difference perturbations of one iteration are integrated
together as rows.
"""

import logging
import math
from typing import Tuple

import numpy as np

from charflow.characteristics import integrate_from, integrate_rows_masked
from charflow.config.settings import get_solver_config
from charflow.errors import CharflowNumericalError
from charflow.models import CostMethod, CostStatus
from charflow.problem import ControlProblem

from .transcription import cost_transcription
from .types import CostQuery, CostResult

logger = logging.getLogger("charflow.cost")

_FD_STEP = 1e-6
_MAX_HALVINGS = 30


def starting_costates(n: int, count: int, seed: int = 0) -> np.ndarray:
    """0, then +-unit axes, then standard normal draws, truncated to `count` rows."""
    rows = [np.zeros(n)]
    for i in range(n):
        for sign in (1.0, -1.0):
            e = np.zeros(n)
            e[i] = sign
            rows.append(e)
    rng = np.random.default_rng(seed)
    while len(rows) < count:
        rows.append(rng.standard_normal(n))
    return np.array(rows[:count])


class _Shooter:
    def __init__(self, prob: ControlProblem, q: CostQuery, steps: int):
        self.prob = prob
        self.q = q
        self.dt = q.duration / steps

    def endpoints(self, P0: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """X(t1) and accumulated cost per row, plus a failure mask (escape or domain fault)."""
        S = P0.shape[0]
        X0 = np.repeat(self.q.x[None, :], S, axis=0)
        try:
            _, Y, _, escaped = integrate_rows_masked(self.prob, X0, P0, np.zeros(S), self.q.duration, self.dt, self.q.t0)
        except CharflowNumericalError:
            if S == 1:
                return np.full((1, self.prob.n), np.nan), np.full(1, np.nan), np.ones(1, dtype=bool)
            parts = [self.endpoints(P0[i : i + 1]) for i in range(S)]
            return tuple(np.concatenate(c) for c in zip(*parts))
        n = self.prob.n
        return Y[-1, :, :n], Y[-1, :, 2 * n], escaped

    def residual(self, X_end: np.ndarray) -> np.ndarray:
        return X_end - self.q.y[None, :]


def _newton(shooter: _Shooter, P: np.ndarray, tol: float, max_iter: int):
    """Damped Newton on all starts at once. Returns list of (p0, value, residual) for converged starts."""
    n = shooter.prob.n
    converged = []
    active = np.ones(P.shape[0], dtype=bool)
    X_end, value, failed = shooter.endpoints(P)
    active &= ~failed

    for it in range(max_iter):
        if not active.any():
            break
        R = shooter.residual(X_end)
        norms = np.linalg.norm(R, axis=1)
        done = active & (norms <= tol)
        for i in np.flatnonzero(done):
            converged.append((P[i].copy(), float(value[i]), float(norms[i])))
        active &= ~done
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break

        # Finite-difference Jacobians dX(t1)/dp0 for every active start.
        eps = _FD_STEP * np.maximum(1.0, np.abs(P[idx]))
        perturbed = np.repeat(P[idx], n, axis=0)
        for i in range(n):
            perturbed[i::n, i] += eps[:, i]
        X_pert, _, bad = shooter.endpoints(perturbed)
        J = (X_pert.reshape(idx.size, n, n) - X_end[idx][:, None, :]) / eps[:, :, None]
        J = np.transpose(J, (0, 2, 1))
        bad_rows = bad.reshape(idx.size, n).any(axis=1)

        delta = np.zeros((idx.size, n))
        for r, i in enumerate(idx):
            if bad_rows[r]:
                continue
            delta[r] = np.linalg.lstsq(J[r], -R[i], rcond=None)[0]
        usable = ~bad_rows & (np.linalg.norm(delta, axis=1) > 0)
        active[idx[~usable]] = False

        # Backtracking: halve the step where the residual does not decrease.
        alpha = np.ones(idx.size)
        pending = usable.copy()
        for _ in range(_MAX_HALVINGS):
            if not pending.any():
                break
            rows = idx[pending]
            trial = P[rows] + alpha[pending, None] * delta[pending]
            X_t, v_t, bad_t = shooter.endpoints(trial)
            new_norms = np.linalg.norm(shooter.residual(X_t), axis=1)
            accept = ~bad_t & (new_norms < norms[rows])
            accepted_rows = rows[accept]
            P[accepted_rows] = trial[accept]
            X_end[accepted_rows] = X_t[accept]
            value[accepted_rows] = v_t[accept]
            still = np.flatnonzero(pending)[~accept]
            pending[:] = False
            pending[still] = True
            alpha[still] *= 0.5
        active[idx[pending]] = False
        logger.debug(f"Shooting iteration {it + 1}: {int(active.sum())} active starts, {len(converged)} converged")

    if active.any():
        R = shooter.residual(X_end)
        for i in np.flatnonzero(active):
            norm = float(np.linalg.norm(R[i]))
            if norm <= tol:
                converged.append((P[i].copy(), float(value[i]), norm))
    return converged


def cost_shooting(
    prob: ControlProblem,
    q: CostQuery,
    fallback: bool = True,
    transcription_intervals: int = 50,
    seed: int = 0,
) -> CostResult:
    """Shooting with transcription fallback; INFEASIBLE when both fail under bounded controls."""
    cfg = get_solver_config().cost
    tol = float(cfg["newton_tol"])
    shooter = _Shooter(prob, q, int(cfg["shooting_steps"]))
    starts = starting_costates(prob.n, int(cfg["shooting_starts"]), seed)
    converged = _newton(shooter, starts, tol, int(cfg["max_newton_iter"]))
    if converged:
        p0, value, residual = min(converged, key=lambda c: (c[1], tuple(c[0])))
        traj = integrate_from(prob, q.x, p0, 0.0, q.duration, shooter.dt, q.t0)
        return CostResult(
            float(traj.U[-1]),
            CostMethod.SHOOTING,
            CostStatus.OK,
            trajectory=traj.X,
            times=traj.times,
            p0=p0,
            terminal_gap=residual,
        )

    logger.debug(f"Shooting did not converge for x={q.x.tolist()} y={q.y.tolist()}")
    if not fallback:
        return CostResult.failed(CostMethod.SHOOTING, CostStatus.NOT_CONVERGED, "no shooting start converged")

    result = cost_transcription(prob, q, transcription_intervals)
    if result.ok:
        return result
    if _controls_bounded(prob):
        return CostResult.failed(
            CostMethod.TRANSCRIPTION,
            CostStatus.INFEASIBLE,
            f"target unreachable: terminal gap {result.terminal_gap:.3g}",
            result.terminal_gap,
        )
    return result


def _controls_bounded(prob: ControlProblem) -> bool:
    return bool(np.any(np.isfinite(prob.U.lower)) or np.any(np.isfinite(prob.U.upper)))


def cost_time(prob: ControlProblem, x, y, t: float) -> float:
    """Finite-horizon cost c_0^t(x, y); math.inf when infeasible or unresolved."""
    result = cost_shooting(prob, CostQuery(x, y, 0.0, t))
    return result.value if result.ok else math.inf

"""Direct transcription: piecewise-constant controls, forward Euler, adjoint gradients.

Objective  sum_k ds * L(x_k, u_k, s_k) + rho * |x_N - y|^2,
minimised with L-BFGS-B under the control box while rho climbs from
rho_start to rho_end by factors of ten, each stage warm-started.
"""

import logging
import math
from typing import Tuple

import numpy as np
from scipy.optimize import minimize

from charflow.config.settings import get_solver_config
from charflow.errors import CharflowNumericalError, SpecError
from charflow.models import CostMethod, CostStatus
from charflow.problem import ControlProblem

from .types import CostQuery, CostResult

logger = logging.getLogger("charflow.cost")

MIN_INTERVALS = 10


class _Transcription:
    def __init__(self, prob: ControlProblem, q: CostQuery, N: int):
        self.prob = prob
        self.q = q
        self.N = N
        self.ds = q.duration / N
        self.s = q.t0 + self.ds * np.arange(N)

    def forward(self, U: np.ndarray) -> np.ndarray:
        X = np.empty((self.N + 1, self.prob.n))
        X[0] = self.q.x
        for k in range(self.N):
            X[k + 1] = X[k] + self.ds * np.array([fk.scalar(X[k], U[k], 0.0) for fk in self.prob.f])
        return X

    def running(self, X: np.ndarray, U: np.ndarray) -> np.ndarray:
        return self.prob.L.vector(list(X[:-1].T), list(U.T), self.s, (self.N,))

    def objective(self, flat: np.ndarray, rho: float) -> Tuple[float, np.ndarray]:
        prob, N, ds = self.prob, self.N, self.ds
        U = flat.reshape(N, prob.m)
        X = self.forward(U)
        gap = X[-1] - self.q.y
        J = ds * float(np.sum(self.running(X, U))) + rho * float(gap @ gap)

        xs, us, shape = list(X[:-1].T), list(U.T), (N,)
        Lx = np.stack([d.vector(xs, us, self.s, shape) for d in prob.L_x], axis=1)
        Lu = np.stack([d.vector(xs, us, self.s, shape) for d in prob.L_u], axis=1)
        fx = np.stack([np.stack([d.vector(xs, us, 0.0, shape) for d in row], axis=1) for row in prob.f_x], axis=1)
        fu = np.stack([np.stack([d.vector(xs, us, 0.0, shape) for d in row], axis=1) for row in prob.f_u], axis=1)

        grad = np.empty((N, prob.m))
        lam = 2.0 * rho * gap
        for k in range(N - 1, -1, -1):
            grad[k] = ds * (Lu[k] + fu[k].T @ lam)
            lam = lam + ds * (fx[k].T @ lam + Lx[k])
        return J, grad.ravel()

    def initial_controls(self) -> np.ndarray:
        if self.prob.is_velocity_control:
            guess = np.repeat(((self.q.y - self.q.x) / self.q.duration)[None, :], self.N, axis=0)
        else:
            guess = np.zeros((self.N, self.prob.m))
        return np.clip(guess, self.prob.U.lower, self.prob.U.upper)

    def bounds(self):
        box = [(lo if math.isfinite(lo) else None, hi if math.isfinite(hi) else None) for lo, hi in zip(self.prob.U.lo, self.prob.U.hi)]
        return box * self.N


def cost_transcription(prob: ControlProblem, q: CostQuery, N: int = 50) -> CostResult:
    if N < MIN_INTERVALS:
        raise SpecError(f"transcription needs at least {MIN_INTERVALS} intervals, got {N}")
    cfg = get_solver_config().cost
    rho = float(cfg["rho_start"])
    rho_end = float(cfg["rho_end"])
    gap_tol = float(cfg["gap_tol"])

    tr = _Transcription(prob, q, N)
    u = tr.initial_controls().ravel()
    bounds = tr.bounds()
    try:
        while True:
            res = minimize(
                tr.objective,
                u,
                args=(rho,),
                jac=True,
                method="L-BFGS-B",
                bounds=bounds,
                options={"maxiter": 1000, "ftol": 1e-15, "gtol": 1e-10},
            )
            u = res.x
            logger.debug(f"Transcription rho={rho:.0e}: objective {res.fun:.10g} ({res.nit} iterations)")
            if rho >= rho_end:
                break
            rho = min(rho * 10.0, rho_end)
    except CharflowNumericalError as e:
        return CostResult.failed(CostMethod.TRANSCRIPTION, CostStatus.ERROR, str(e))

    U = u.reshape(N, prob.m)
    X = tr.forward(U)
    value = tr.ds * float(np.sum(tr.running(X, U)))
    gap = float(np.linalg.norm(X[-1] - q.y))
    times = q.t0 + tr.ds * np.arange(N + 1)
    status = CostStatus.OK if gap <= gap_tol else CostStatus.NOT_CONVERGED
    message = "" if status is CostStatus.OK else f"terminal gap {gap:.3g} exceeds {gap_tol:g}"
    return CostResult(value, CostMethod.TRANSCRIPTION, status, trajectory=X, times=times, terminal_gap=gap, message=message, extra={"controls": U})

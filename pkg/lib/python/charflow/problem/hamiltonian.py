"""Hamiltonian H(x, p, t) = sup_u <p, f(x, u)> - L(x, u, t) with maximiser and envelope derivatives.

Two branches:
  * closed form, when the problem is control-affine with a diagonal quadratic
    running cost (decided structurally on the derivative trees);
  * numeric, a multi-start bounded coordinate search refined by L-BFGS-B.

Both return derivatives through the envelope rule, evaluated at the maximiser.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from charflow.config.settings import get_solver_config
from charflow.errors import DimensionError, SuperlinearityError
from charflow.models import HamiltonianBranch

from .control import ControlProblem

logger = logging.getLogger("charflow.problem")

_ZERO_CURVATURE = 1e-14
_TIE = 1e-12


@dataclass(frozen=True, eq=False)
class HamiltonianEval:
    value: float
    argmax_u: np.ndarray
    Hx: np.ndarray
    Hp: np.ndarray
    branch: HamiltonianBranch = HamiltonianBranch.CLOSED_FORM


@dataclass(frozen=True, eq=False)
class HamiltonianBatch:
    """Row-wise Hamiltonian data for S points: value (S,), argmax (S, m), Hx and Hp (S, n)."""

    value: np.ndarray
    argmax_u: np.ndarray
    Hx: np.ndarray
    Hp: np.ndarray

    def row(self, i: int, branch: HamiltonianBranch) -> HamiltonianEval:
        return HamiltonianEval(float(self.value[i]), self.argmax_u[i].copy(), self.Hx[i].copy(), self.Hp[i].copy(), branch)


def pairing(prob: ControlProblem, x, p, u, t: float = 0.0) -> float:
    """<p, f(x, u)> - L(x, u, t)"""
    return float(sum(pk * fk.scalar(x, u, t) for pk, fk in zip(p, prob.f)) - prob.L.scalar(x, u, t))


def hamiltonian(prob: ControlProblem, x, p, t: float = 0.0) -> HamiltonianEval:
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    if x.shape != (prob.n,) or p.shape != (prob.n,):
        raise DimensionError(f"x and p must have {prob.n} components")
    if not np.all(np.isfinite(p)):
        raise DimensionError("costate must be finite")
    x = prob.wrap(x)

    if prob.control_affine_quadratic:
        u = _closed_form_argmax(prob, x[None, :], p[None, :], t)
        if u is not None:
            return _envelope(prob, x[None, :], p[None, :], u, t).row(0, HamiltonianBranch.CLOSED_FORM)

    u = _numeric_argmax(prob, x, p, t)
    return _envelope(prob, x[None, :], p[None, :], u[None, :], t).row(0, HamiltonianBranch.NUMERIC)


def hamiltonian_batch(prob: ControlProblem, X, P, t: float = 0.0) -> HamiltonianBatch:
    """Vectorised Hamiltonian over rows of X and P (shape (S, n))."""
    X = prob.wrap(np.atleast_2d(np.asarray(X, dtype=float)))
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if X.shape != P.shape or X.shape[1] != prob.n:
        raise DimensionError(f"X and P must both have shape (S, {prob.n})")

    U = None
    if prob.control_affine_quadratic:
        U = _closed_form_argmax(prob, X, P, t)
    if U is None:
        U = np.vstack([_numeric_argmax(prob, x, p, t) for x, p in zip(X, P)]) if len(X) else np.zeros((0, prob.m))
    return _envelope(prob, X, P, U, t)


def _columns(A: np.ndarray):
    return [A[:, i] for i in range(A.shape[1])]


def _closed_form_argmax(prob: ControlProblem, X, P, t) -> Optional[np.ndarray]:
    """Argmax of b.u - sum_j a_j u_j^2 / 2 over the box, or None when some a_j < 0."""
    S = X.shape[0]
    xs, u0 = _columns(X), [np.zeros(S)] * prob.m
    U = np.empty((S, prob.m))
    for j in range(prob.m):
        B_j = np.stack([prob.f_u[k][j].vector(xs, u0, t, (S,)) for k in range(prob.n)], axis=1)
        b = np.einsum("sk,sk->s", P, B_j) - prob.L_u[j].vector(xs, u0, t, (S,))
        a = prob.L_uu[j][j].vector(xs, u0, t, (S,))
        if np.any(a < -_ZERO_CURVATURE):
            return None
        lo, hi = prob.U.lo[j], prob.U.hi[j]
        curved = a > _ZERO_CURVATURE
        with np.errstate(divide="ignore", invalid="ignore"):
            interior = np.clip(np.where(curved, b / np.where(curved, a, 1.0), 0.0), lo, hi)
        # zero curvature: bang-bang, ties to the lower end
        flat = np.where(b > 0, hi, np.where(b < 0, lo, lo if math.isfinite(lo) else min(max(0.0, lo), hi)))
        U[:, j] = np.where(curved, interior, flat)
        if not np.all(np.isfinite(U[:, j])):
            raise SuperlinearityError(math.inf)
    return U


def _envelope(prob: ControlProblem, X, P, U, t) -> HamiltonianBatch:
    S = X.shape[0]
    xs, us = _columns(X), _columns(U)
    F = np.stack([fk.vector(xs, us, t, (S,)) for fk in prob.f], axis=1) if S else np.zeros((0, prob.n))
    L = prob.L.vector(xs, us, t, (S,))
    value = np.einsum("sk,sk->s", P, F) - L
    Hx = np.empty((S, prob.n))
    for i in range(prob.n):
        dfx = np.stack([prob.f_x[k][i].vector(xs, us, t, (S,)) for k in range(prob.n)], axis=1)
        Hx[:, i] = np.einsum("sk,sk->s", P, dfx) - prob.L_x[i].vector(xs, us, t, (S,))
    return HamiltonianBatch(value, U, Hx, F)


def _search_bounds(prob: ControlProblem, radius: float) -> Tuple[np.ndarray, np.ndarray]:
    lo = np.array(prob.U.lo, dtype=float)
    hi = np.array(prob.U.hi, dtype=float)
    hi_free, lo_free = ~np.isfinite(hi), ~np.isfinite(lo)
    hi = np.where(hi_free, np.maximum(radius, np.where(lo_free, 0.0, lo) + radius), hi)
    lo = np.where(lo_free, np.minimum(-radius, hi - 2 * radius), lo)
    return lo, hi


def _numeric_argmax(prob: ControlProblem, x, p, t) -> np.ndarray:
    """Multi-start search; unbounded components use a radius doubled until the maximiser is interior."""
    cfg = get_solver_config().hamiltonian
    radius = float(cfg["unbounded_start_radius"])
    cap = float(cfg["radius_cap"])
    free_lo = ~np.isfinite(np.array(prob.U.lo))
    free_hi = ~np.isfinite(np.array(prob.U.hi))

    while True:
        lo, hi = _search_bounds(prob, radius)
        u, value = _maximize_in_box(prob, x, p, t, lo, hi, cfg)
        edge = 1e-6 * max(1.0, radius)
        pinned = np.any(free_lo & (u - lo <= edge)) or np.any(free_hi & (hi - u <= edge))
        if not pinned:
            return u
        if radius >= cap:
            raise SuperlinearityError(value)
        radius = min(2.0 * radius, cap)
        logger.debug(f"Hamiltonian maximiser on the search edge, radius -> {radius:g}")


def _maximize_in_box(prob, x, p, t, lo, hi, cfg) -> Tuple[np.ndarray, float]:
    starts = int(cfg["starts"])
    u_tol = float(cfg["u_tol"])
    blowup = float(cfg["blowup"])
    m = prob.m

    def objective(u) -> float:
        value = pairing(prob, x, p, u, t)
        if value > blowup:
            raise SuperlinearityError(value)
        return value

    def negative_with_gradient(u):
        g = np.array(
            [sum(p[k] * prob.f_u[k][j].scalar(x, u, t) for k in range(prob.n)) - prob.L_u[j].scalar(x, u, t) for j in range(m)]
        )
        return -objective(u), -g

    best_u: Optional[np.ndarray] = None
    best = -math.inf
    stratum = (hi - lo) / starts
    for s in range(starts):
        # each start owns one stratum per coordinate
        cells = np.array([(s + 7 * j) % starts for j in range(m)])
        u = lo + (cells + 0.5) * stratum
        windows = [(lo[j] + cells[j] * stratum[j], lo[j] + (cells[j] + 1) * stratum[j]) for j in range(m)]
        for sweep in range(5):
            previous = u.copy()
            for j in range(m):
                if sweep > 0:
                    windows[j] = (max(lo[j], u[j] - stratum[j]), min(hi[j], u[j] + stratum[j]))

                if windows[j][1] <= windows[j][0]:
                    continue

                def along(v, j=j):
                    trial = u.copy()
                    trial[j] = v
                    return -objective(trial)

                res = minimize_scalar(along, bounds=windows[j], method="bounded", options={"xatol": u_tol})
                if -res.fun >= objective(u):
                    u[j] = res.x
            if m == 1 or np.max(np.abs(u - previous)) < u_tol:
                break

        refined = minimize(negative_with_gradient, u, jac=True, method="L-BFGS-B", bounds=list(zip(lo, hi)))
        if np.all(np.isfinite(refined.x)) and -refined.fun > objective(u):
            u = np.clip(refined.x, lo, hi)
        value = objective(u)
        if value > best + _TIE or (abs(value - best) <= _TIE and best_u is not None and tuple(u) < tuple(best_u)):
            best, best_u = value, u.copy()

    return best_u, best

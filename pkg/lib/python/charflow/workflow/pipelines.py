"""CLI pipelines. Each returns a plain result dict and writes its artefacts under `out`."""

import logging
from typing import Any, Dict, Optional, Sequence

import numpy as np

from charflow.characteristics import build_flow_map
from charflow.config.problem_spec import ProblemSpec
from charflow.cost import closed_form_quadratic, cost_function, cost_matrix
from charflow.errors import SpecError
from charflow.hjb import hopf_lax_on_grid, solve_hjb, viscosity_residual
from charflow.io import (
    write_cost_matrix_csv,
    write_measure_csv,
    write_monge_map_csv,
    write_pair_csv,
    write_plan_csv,
    write_summary,
    write_trajectories_csv,
    write_value_grid_csv,
)
from charflow.problem import check_assumptions, hamiltonian
from charflow.transport import (
    central_potentials,
    check_support_condition,
    dual_potentials,
    initial_measure_action,
    kantorovich_total_cost,
    monge_map,
    monge_plan_is_deterministic,
    pushforward,
    skipped_action,
    solve_mk,
    wasserstein_1d,
)

from .util import (
    ensure_output_directory,
    get_output_file_path,
    log_stage_complete,
    log_stage_error,
    log_stage_start,
)

ORACLE_NODE_LIMIT = 2000


def _logger(logger: Optional[logging.Logger]) -> logging.Logger:
    return logger or logging.getLogger("charflow")


def cmd_hamiltonian(spec: ProblemSpec, x, p, t: float = 0.0, out: Optional[str] = None, logger=None) -> Dict[str, Any]:
    logger = _logger(logger)
    prob = spec.problem
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if len(x) != prob.n or len(p) != prob.n:
        raise SpecError(f"x and p need {prob.n} components")
    log_stage_start(logger, "Hamiltonian")
    h = hamiltonian(prob, x, p, t)
    result = {
        "value": h.value,
        "argmax_u": h.argmax_u,
        "Hx": h.Hx,
        "Hp": h.Hp,
        "branch": h.branch.value,
    }
    if out:
        ensure_output_directory(out)
        result["summary"] = write_summary(get_output_file_path(out, "hamiltonian", "json"), result)
    log_stage_complete(logger, "Hamiltonian", h.branch.value)
    return result


def cmd_characteristics(
    spec: ProblemSpec,
    out: str,
    seeds: Optional[Sequence[int]] = None,
    T: Optional[float] = None,
    dt: Optional[float] = None,
    threads: int = 1,
    logger=None,
) -> Dict[str, Any]:
    logger = _logger(logger)
    prob = spec.problem
    counts = list(spec.char_seeds if seeds is None else seeds)
    if not counts or any(int(c) < 1 for c in counts):
        raise SpecError("seed list is empty")
    if len(counts) != prob.n:
        raise SpecError(f"seed counts need {prob.n} entries, got {len(counts)}")
    horizon = T if T is not None else (spec.char_horizon if spec.char_horizon is not None else spec.horizon)
    step = dt if dt is not None else spec.char_dt
    if horizon < 0:
        raise SpecError(f"horizon must be non-negative, got {horizon}")

    log_stage_start(logger, "Characteristics", f"{int(np.prod(counts))} seeds, T={horizon:g}")
    try:
        flow = build_flow_map(prob, spec.initial_expr(), spec.char_lo, spec.char_hi, counts, horizon, step, threads)
    except Exception as e:
        log_stage_error(logger, "Characteristics", e)
        raise
    k = flow.caustic_index() if all(c >= 3 for c in counts) else None
    t_star = flow.horizon if k is None else float(flow.times[k])
    ensure_output_directory(out)
    result = {
        "caustic_time": t_star,
        "caustic": k is not None,
        "seeds": int(flow.seeds.shape[0]),
        "stamps": int(len(flow.times)),
        "dt": flow.dt,
        "trajectories": write_trajectories_csv(flow, get_output_file_path(out, "trajectories", "csv")),
    }
    result["summary"] = write_summary(get_output_file_path(out, "characteristics", "json"), result)
    log_stage_complete(logger, "Characteristics", f"T*={t_star:.6g}")
    return result


def cmd_hjb(spec: ProblemSpec, out: str, threads: int = 1, logger=None) -> Dict[str, Any]:
    logger = _logger(logger)
    prob = spec.problem
    grid = spec.grid()
    phi0 = spec.initial_expr() if spec.initial else np.zeros(grid.shape)
    log_stage_start(logger, "HJB", f"{grid.size} nodes, dt={spec.grid_dt:g}, T={spec.horizon:g}")
    try:
        vg = solve_hjb(prob, phi0, grid, spec.horizon, spec.grid_dt, threads)
    except Exception as e:
        log_stage_error(logger, "HJB", e)
        raise
    residual = viscosity_residual(vg, prob)
    ensure_output_directory(out)
    result: Dict[str, Any] = {
        "nodes": grid.size,
        "steps": vg.steps,
        "residual": residual.to_dict(),
        "value_grid": write_value_grid_csv(vg, get_output_file_path(out, "value_grid", "csv")),
    }
    if prob.is_quadratic_family and spec.initial:
        points = grid.points()
        final = vg.final.ravel()
        stride = max(1, int(np.ceil(len(points) / ORACLE_NODE_LIMIT)))
        picked = np.arange(0, len(points), stride)
        exact = hopf_lax_on_grid(spec.initial_expr(), float(vg.times[-1] - vg.t_start), points[picked], prob)
        result["oracle_sup_error"] = float(np.max(np.abs(final[picked] - exact)))
        result["oracle_nodes"] = int(len(picked))
    result["summary"] = write_summary(get_output_file_path(out, "hjb", "json"), result)
    log_stage_complete(logger, "HJB", f"median residual {residual.median:.3g}")
    return result


def _cost_evaluator(spec: ProblemSpec):
    if spec.cost_policy == "closed_form":
        if not spec.problem.is_quadratic_family:
            raise SpecError("closed-form cost applies only to f = u, L = |u|^2/2 with unbounded controls")
        return closed_form_quadratic(spec.transport_t1)
    return cost_function(
        spec.problem, spec.cost_policy, spec.transport_t1, transcription_intervals=spec.transcription_intervals
    )


def _check_measures(spec: ProblemSpec, mu0, mu1) -> None:
    prob = spec.problem
    for name, mu in (("mu0", mu0), ("mu1", mu1)):
        if not mu.inside(prob.domain.lower, prob.domain.upper):
            raise SpecError(f"{name} has atoms outside the domain")


def cmd_cost(spec: ProblemSpec, out: str, threads: int = 1, logger=None) -> Dict[str, Any]:
    logger = _logger(logger)
    mu0, mu1 = spec.measures()
    _check_measures(spec, mu0, mu1)
    log_stage_start(logger, "Cost matrix", f"{mu0.size}x{mu1.size}, {spec.cost_policy}")
    cm = cost_matrix(
        spec.problem, mu0.atoms, mu1.atoms, spec.cost_policy, spec.transport_t1, threads, spec.transcription_intervals
    )
    ensure_output_directory(out)
    result = {
        "rows": mu0.size,
        "columns": mu1.size,
        "policy": spec.cost_policy,
        "forbidden_arcs": int((~cm.allowed).sum()),
        "cost_matrix": write_cost_matrix_csv(cm, get_output_file_path(out, "cost_matrix", "csv")),
    }
    result["summary"] = write_summary(get_output_file_path(out, "cost", "json"), result)
    log_stage_complete(logger, "Cost matrix", f"{result['forbidden_arcs']} forbidden arcs")
    return result


def cmd_transport(
    spec: ProblemSpec,
    out: str,
    mu0=None,
    mu1=None,
    threads: int = 1,
    logger=None,
) -> Dict[str, Any]:
    """cost matrix -> MK plan -> potentials and certificates -> Monge map -> push-forward."""
    logger = _logger(logger)
    prob = spec.problem
    if mu0 is None or mu1 is None:
        mu0, mu1 = spec.measures()
    _check_measures(spec, mu0, mu1)
    ensure_output_directory(out)

    log_stage_start(logger, "Cost matrix", f"{mu0.size}x{mu1.size}, {spec.cost_policy}")
    cm = cost_matrix(prob, mu0.atoms, mu1.atoms, spec.cost_policy, spec.transport_t1, threads, spec.transcription_intervals)
    write_cost_matrix_csv(cm, get_output_file_path(out, "cost_matrix", "csv"))
    log_stage_complete(logger, "Cost matrix")

    log_stage_start(logger, "Monge-Kantorovich")
    try:
        plan = solve_mk(cm, mu0, mu1)
    except Exception as e:
        log_stage_error(logger, "Monge-Kantorovich", e)
        raise
    pair = dual_potentials(plan)
    dual = kantorovich_total_cost(pair, mu0, mu1)
    support = check_support_condition(plan, pair)
    if not support.passed:
        logger.warning(f"⚠️ Support condition violated by {support.max_violation:.3e}")
    write_plan_csv(plan, get_output_file_path(out, "plan", "csv"))
    write_pair_csv(pair, get_output_file_path(out, "pairs", "csv"))
    log_stage_complete(logger, "Monge-Kantorovich", f"objective {plan.objective:.12g}, {plan.pivots} pivots")

    log_stage_start(logger, "Monge map")
    cost_fn = _cost_evaluator(spec)
    central = central_potentials(plan)
    try:
        mapping = monge_map(prob, mu0, mu1, central, cm, cost_fn, plan, spec.transport_dt, threads, spec.transport_t1)
    except Exception as e:
        log_stage_error(logger, "Monge map", e)
        raise
    pushed = pushforward(mapping, mu0)
    write_monge_map_csv(mapping, get_output_file_path(out, "monge_map", "csv"))
    write_measure_csv(pushed, get_output_file_path(out, "pushforward", "csv"))
    action = initial_measure_action(mapping, cost_fn)
    log_stage_complete(logger, "Monge map", f"{int(mapping.accepted.sum())} of {mu0.size} atoms flowed")

    summary = {
        "primal": plan.objective,
        "dual": dual,
        "gap": abs(plan.objective - dual),
        "support_violation": support.max_violation,
        "admissibility_violation": support.admissibility_violation,
        "pushforward_W1": wasserstein_1d(pushed, mu1) if prob.n == 1 else None,
        "action": action,
        "skipped_mass": mapping.skipped_mass,
        "skipped_action": skipped_action(mapping, cost_fn),
        "deterministic_plan": monge_plan_is_deterministic(plan),
        "pivots": plan.pivots,
    }
    write_summary(get_output_file_path(out, "transport", "json"), summary)
    return summary


def cmd_validate(spec: ProblemSpec, samples: int = 1000, seed: int = 0, out: Optional[str] = None, logger=None) -> Dict[str, Any]:
    logger = _logger(logger)
    log_stage_start(logger, "Assumption check", f"{samples} samples")
    report = check_assumptions(spec.problem, samples, seed)
    for flag in report.flags:
        logger.warning(f"⚠️ {flag}")
    result = report.to_dict()
    if out:
        ensure_output_directory(out)
        result["summary"] = write_summary(get_output_file_path(out, "validate", "json"), report.to_dict())
    log_stage_complete(logger, "Assumption check", "all advisories pass" if report.passed else f"{len(report.flags)} flags")
    return result

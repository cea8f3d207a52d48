"""Grid dynamic-programming oracle for c(x, y).

Value iteration on the HJB grid from point initial data: 0 at x, BIG elsewhere.
In one dimension with f = u the sampled velocities are chosen so that every foot
point is a node, which keeps the point data from smearing through interpolation.
"""

import logging
import math
from typing import Optional

import numpy as np

from charflow.config.settings import get_solver_config
from charflow.errors import SpecError
from charflow.hjb import GridSpec, cfl_limit, control_samples, lattice_controls, solve_hjb
from charflow.models import CostMethod, CostStatus
from charflow.problem import ControlProblem

from .types import CostQuery, CostResult

logger = logging.getLogger("charflow.cost")

# nodes crossed per step by the slowest nonzero lattice velocity
LATTICE_STRIDE = 16


def cost_dp_oracle(prob: ControlProblem, q: CostQuery, grid: Optional[GridSpec] = None, h: Optional[float] = None) -> CostResult:
    if prob.n > 2:
        raise SpecError("the DP oracle supports 1 or 2 state dimensions")
    if grid is None:
        if h is None:
            raise SpecError("DP oracle needs a grid or a spacing")
        grid = GridSpec.with_spacing(prob.domain.lo, prob.domain.hi, h)
    big = float(get_solver_config().cost["oracle_big"])
    x_idx = grid.node_index(q.x)
    y_idx = grid.node_index(q.y)

    phi = np.full(grid.shape, big)
    phi[x_idx] = 0.0
    T = q.duration

    if prob.is_velocity_control and grid.dim == 1:
        steps = max(1, math.ceil(T / (LATTICE_STRIDE * grid.h)))
        dt = T / steps
        controls = lattice_controls(prob, grid, dt)
    else:
        controls = control_samples(prob)
        limit = cfl_limit(prob, grid, controls)
        steps = max(1, math.ceil(T / limit)) if math.isfinite(limit) else 1
        dt = T / steps

    vg = solve_hjb(prob, phi, grid, T, dt, controls=controls, t_start=q.t0, check_cfl=False, inject=False)
    value = float(vg.final[y_idx])
    logger.debug(f"DP oracle: {steps} steps of {dt:g}, {controls.shape[0]} controls, value {value:.6g}")
    if value >= big / 2:
        return CostResult(math.inf, CostMethod.ORACLE, CostStatus.INFEASIBLE, message="target not reached on the grid")
    return CostResult(value, CostMethod.ORACLE, CostStatus.OK)

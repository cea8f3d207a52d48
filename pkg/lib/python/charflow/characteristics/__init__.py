from .flow import (
    FlowMap,
    build_flow_map,
    caustic_time,
    jacobian_determinants,
    reconstruct_solution,
    seed_grid,
)
from .integrator import (
    CharState,
    CharTrajectory,
    characteristic_rhs,
    initial_costate,
    integrate_characteristic,
    integrate_from,
    integrate_rows,
    integrate_rows_masked,
    rk4_step,
    time_grid,
    value_along,
)

__all__ = [
    "FlowMap",
    "build_flow_map",
    "caustic_time",
    "jacobian_determinants",
    "reconstruct_solution",
    "seed_grid",
    "CharState",
    "CharTrajectory",
    "characteristic_rhs",
    "initial_costate",
    "integrate_characteristic",
    "integrate_from",
    "integrate_rows",
    "integrate_rows_masked",
    "rk4_step",
    "time_grid",
    "value_along",
]

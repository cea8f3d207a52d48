# problem_spec pulls in the solver packages; import it as charflow.config.problem_spec
from .settings import (
    SolverConfig,
    get_solver_config,
    reset_solver_config,
)

__all__ = [
    "SolverConfig",
    "get_solver_config",
    "reset_solver_config",
]

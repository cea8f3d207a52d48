from .assumptions import AssumptionReport, check_assumptions
from .control import (
    ControlProblem,
    ControlSet,
    dynamics,
    lagrangian_value,
    running_cost,
)
from .hamiltonian import (
    HamiltonianBatch,
    HamiltonianEval,
    hamiltonian,
    hamiltonian_batch,
    pairing,
)

__all__ = [
    "AssumptionReport",
    "check_assumptions",
    "ControlProblem",
    "ControlSet",
    "dynamics",
    "lagrangian_value",
    "running_cost",
    "HamiltonianBatch",
    "HamiltonianEval",
    "hamiltonian",
    "hamiltonian_batch",
    "pairing",
]

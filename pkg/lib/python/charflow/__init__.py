# charflow/__init__.py
from .errors import CharflowNumericalError, CharflowUserError
from .models import Boundary, Box
from .problem import ControlProblem, hamiltonian

__all__ = [
    "Boundary",
    "Box",
    "CharflowNumericalError",
    "CharflowUserError",
    "ControlProblem",
    "hamiltonian",
]

"""Exception hierarchy shared by every charflow module.

User-facing mistakes (bad spec files, bad expressions, impossible requests) derive
from ``CharflowUserError`` and map to CLI exit code 1. Numerical breakdowns derive
from ``CharflowNumericalError`` and map to exit code 2.
"""

from typing import Optional


class CharflowUserError(ValueError):
    """Input or request the user can fix."""


class CharflowNumericalError(RuntimeError):
    """A computation that could not be carried out on valid input."""


class ExprSyntaxError(CharflowUserError):
    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at byte {offset}")


class UnknownIdentifierError(CharflowUserError):
    def __init__(self, name: str, offset: int):
        self.name = name
        self.offset = offset
        super().__init__(f"Unknown identifier '{name}' at byte {offset}")


class DimensionError(CharflowUserError):
    """Variable index or vector length does not match declared dimensions."""


class SpecError(CharflowUserError):
    """Malformed problem-spec file or parameter."""


class CFLViolationError(CharflowUserError):
    def __init__(self, dt: float, limit: float):
        self.dt = dt
        self.limit = limit
        super().__init__(f"CFL violation: dt={dt:g} exceeds h/max|f|={limit:g}")


class ExtrapolationError(CharflowUserError):
    """Query point lies outside the hull of the deformed seed grid."""


class InfeasibleTransportError(CharflowUserError):
    """Forbidden arcs disconnect supply from demand."""


class UnbalancedMeasuresError(CharflowUserError):
    """Source and target masses differ."""


class ExprDomainError(CharflowNumericalError):
    def __init__(self, message: str, subexpr: str):
        self.subexpr = subexpr
        super().__init__(f"{message} in '{subexpr}'")


class SuperlinearityError(CharflowNumericalError):
    def __init__(self, value: float):
        self.value = value
        super().__init__(
            f"superlinearity violated: Hamiltonian search reached {value:.3e} "
            "(L must be superlinear w.r.t u on unbounded controls)"
        )


class EscapeError(CharflowNumericalError):
    def __init__(self, time: float, state):
        self.time = time
        self.state = state
        super().__init__(f"escape: characteristic left the clamped domain at t={time:.6g}")


class NotConvergedError(CharflowNumericalError):
    def __init__(self, message: str, residual: Optional[float] = None):
        self.residual = residual
        super().__init__(message)


class ExcessiveSkippedMassError(CharflowNumericalError):
    def __init__(self, skipped: float, limit: float):
        self.skipped = skipped
        self.limit = limit
        super().__init__(
            f"non-differentiable atoms carry {skipped:.3%} of mu0 mass (limit {limit:.1%})"
        )

from .grid import GridSpec, ValueGrid, default_grid, sample_on_grid
from .oracle import hopf_lax_on_grid, hopf_lax_oracle
from .residual import ResidualReport, kink_mask, viscosity_residual
from .solver import (
    SemigroupOp,
    cfl_limit,
    control_samples,
    lattice_controls,
    semigroup_apply,
    solve_hjb,
)


def value_at(vg: ValueGrid, t: float, x) -> float:
    """Interpolated V(t, x) from a solved grid."""
    return vg.value_at(t, x)


__all__ = [
    "GridSpec",
    "ValueGrid",
    "default_grid",
    "sample_on_grid",
    "hopf_lax_on_grid",
    "hopf_lax_oracle",
    "ResidualReport",
    "kink_mask",
    "viscosity_residual",
    "SemigroupOp",
    "cfl_limit",
    "control_samples",
    "lattice_controls",
    "semigroup_apply",
    "solve_hjb",
    "value_at",
]

from .types import (
    Boundary,
    Box,
    CostMethod,
    CostStatus,
    HamiltonianBranch,
)

__all__ = [
    "Boundary",
    "Box",
    "CostMethod",
    "CostStatus",
    "HamiltonianBranch",
]

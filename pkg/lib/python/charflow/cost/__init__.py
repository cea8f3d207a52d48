from .matrix import (
    POLICIES,
    CostEvaluator,
    CostMatrix,
    closed_form_quadratic,
    cost_function,
    cost_matrix,
    cost_query,
)
from .oracle import cost_dp_oracle
from .shooting import cost_shooting, cost_time, starting_costates
from .transcription import cost_transcription
from .types import CostQuery, CostResult

__all__ = [
    "POLICIES",
    "CostEvaluator",
    "CostMatrix",
    "closed_form_quadratic",
    "cost_function",
    "cost_matrix",
    "cost_query",
    "cost_dp_oracle",
    "cost_shooting",
    "cost_time",
    "starting_costates",
    "cost_transcription",
    "CostQuery",
    "CostResult",
]

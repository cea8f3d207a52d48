"""Discrete Monge-Kantorovich solver, Kantorovich duality and the Monge map."""

from .duality import (
    KantorovichPair,
    PointwiseReport,
    SupportReport,
    admissibility_violation,
    c_transform_backward,
    c_transform_forward,
    central_potentials,
    check_support_condition,
    curve_in_section_set,
    dual_potentials,
    extend_target_potential,
    kantorovich_total_cost,
    monge_plan_is_deterministic,
    pointwise_duality,
)
from .measures import (
    DiscreteMeasure,
    atom_spacing,
    merge_atoms,
    pushforward,
    quantile_measure,
    wasserstein_1d,
)
from .monge import (
    MongeMap,
    SectionResult,
    candidate_targets,
    initial_measure_action,
    monge_map,
    monge_section,
    plan_images,
    skipped_action,
)
from .network_simplex import TransportPlan, cost_values, solve_mk

__all__ = [
    "DiscreteMeasure",
    "KantorovichPair",
    "MongeMap",
    "PointwiseReport",
    "SectionResult",
    "SupportReport",
    "TransportPlan",
    "admissibility_violation",
    "atom_spacing",
    "c_transform_backward",
    "c_transform_forward",
    "candidate_targets",
    "central_potentials",
    "check_support_condition",
    "cost_values",
    "curve_in_section_set",
    "dual_potentials",
    "extend_target_potential",
    "initial_measure_action",
    "kantorovich_total_cost",
    "merge_atoms",
    "monge_map",
    "monge_plan_is_deterministic",
    "monge_section",
    "plan_images",
    "pointwise_duality",
    "pushforward",
    "quantile_measure",
    "skipped_action",
    "solve_mk",
    "wasserstein_1d",
]

from .csv_io import (
    FLOAT_FORMAT,
    format_float,
    format_vector,
    parse_vector,
    read_measure_csv,
    write_cost_matrix_csv,
    write_measure_csv,
    write_monge_map_csv,
    write_pair_csv,
    write_plan_csv,
    write_trajectories_csv,
    write_value_grid_csv,
)
from .summary import SCHEMA_VERSION, read_summary, write_summary

__all__ = [
    "FLOAT_FORMAT",
    "format_float",
    "format_vector",
    "parse_vector",
    "read_measure_csv",
    "write_cost_matrix_csv",
    "write_measure_csv",
    "write_monge_map_csv",
    "write_pair_csv",
    "write_plan_csv",
    "write_trajectories_csv",
    "write_value_grid_csv",
    "SCHEMA_VERSION",
    "read_summary",
    "write_summary",
]

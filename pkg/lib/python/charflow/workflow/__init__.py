from .pipelines import (
    cmd_cost,
    cmd_characteristics,
    cmd_hamiltonian,
    cmd_hjb,
    cmd_transport,
    cmd_validate,
)
from .util import (
    ensure_output_directory,
    get_output_file_path,
    log_stage_complete,
    log_stage_error,
    log_stage_start,
)

__all__ = [
    "cmd_cost",
    "cmd_characteristics",
    "cmd_hamiltonian",
    "cmd_hjb",
    "cmd_transport",
    "cmd_validate",
    "ensure_output_directory",
    "get_output_file_path",
    "log_stage_complete",
    "log_stage_error",
    "log_stage_start",
]

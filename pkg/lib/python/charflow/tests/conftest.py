"""Common test utilities and fixtures for charflow tests"""
import shutil
import tempfile
from pathlib import Path
from typing import Optional, Sequence

import yaml

from charflow.config.settings import reset_solver_config
from charflow.problem import ControlProblem


class TempWorkspace:
    """Context manager for temporary test workspace"""

    def __init__(self):
        self.temp_dir = None

    def __enter__(self):
        self.temp_dir = tempfile.mkdtemp()
        return self.temp_dir

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self.temp_dir and Path(self.temp_dir).exists():
            shutil.rmtree(self.temp_dir)


def quadratic_problem(
    n: int = 1,
    half_width: float = 2.0,
    boundary: str = "clamp",
    control_bound: Optional[float] = None,
) -> ControlProblem:
    """f = u, L = |u|^2/2 on [-half_width, half_width]^n."""
    dynamics = [f"u{k}" for k in range(n)]
    lagrangian = " + ".join(f"u{k}^2/2" for k in range(n))
    lo = ["-inf"] * n if control_bound is None else [-control_bound] * n
    hi = ["inf"] * n if control_bound is None else [control_bound] * n
    return ControlProblem.build(dynamics, lagrangian, lo, hi, [-half_width] * n, [half_width] * n, 1.0, boundary)


def double_integrator(half_width: float = 5.0) -> ControlProblem:
    """x0' = x1, x1' = u0 with L = u0^2/2."""
    return ControlProblem.build(
        ["x1", "u0"], "u0^2/2", ["-inf"], ["inf"], [-half_width, -half_width], [half_width, half_width]
    )


def quadratic_spec(**overrides) -> dict:
    """Problem-spec mapping for the 1-D quadratic family."""
    data = {
        "dims": {"n": 1, "m": 1},
        "dynamics": ["u0"],
        "lagrangian": "u0^2/2",
        "control": {"lo": ["-inf"], "hi": ["inf"]},
        "domain": {"lo": [-3.0], "hi": [3.0]},
        "boundary": "clamp",
        "horizon": 1.0,
        "grid": {"nodes": [301], "dt": 0.01},
        "initial": "x0^2/2",
        "characteristics": {"seeds": [41], "seed_lo": [-1.0], "seed_hi": [1.0], "dt": 0.001, "horizon": 1.0},
        "measures": {
            "mu0": {"atoms": [[0.0], [1.0], [2.0]]},
            "mu1": {"atoms": [[0.5], [1.5], [2.5]]},
        },
        "transport": {"t1": 1.0, "dt": 0.01, "policy": "closed_form"},
        "seed": 0,
    }
    for key, value in overrides.items():
        data[key] = value
    return data


def write_spec(directory: str, data: dict, filename: str = "spec.yaml") -> str:
    path = Path(directory) / filename
    path.write_text(yaml.safe_dump(data, sort_keys=False))
    return str(path)


def write_measure_file(directory: str, atoms: Sequence[float], weights: Sequence[float], filename: str) -> str:
    path = Path(directory) / filename
    lines = ["x0,weight"] + [f"{a!r},{w!r}" for a, w in zip(atoms, weights)]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def fresh_config() -> None:
    """Forget any cached solver config."""
    reset_solver_config()

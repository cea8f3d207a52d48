"""
Solver configuration loader.
Loads numerical defaults from the root-level config.yaml.
"""

import logging
import os
from copy import deepcopy
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger("charflow.config")


_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "hamiltonian": {
        "starts": 20,
        "u_tol": 1e-9,
        "unbounded_start_radius": 1.0,
        "radius_cap": 1e6,
        "blowup": 1e12,
    },
    "characteristics": {
        "det_threshold": 1e-6,
        "collision_factor": 1e-6,
    },
    "hjb": {
        "control_samples": 33,
        "unbounded_control_radius": 2.0,
        "kink_threshold": 0.1,
        "argmax_injection": "always",
    },
    "cost": {
        "shooting_starts": 8,
        "shooting_steps": 100,
        "newton_tol": 1e-8,
        "max_newton_iter": 50,
        "rho_start": 1e2,
        "rho_end": 1e8,
        "gap_tol": 1e-3,
        "oracle_big": 1e6,
    },
    "transport": {
        "pivot_tol": 1e-12,
        "stencil_fraction": 1e-4,
        "max_skipped_mass": 0.05,
        "merge_tol": 1e-9,
        "candidate_arcs": 6,
    },
    "runtime": {
        "threads": 1,
        "seed": 0,
    },
}


class SolverConfig:
    """Numerical defaults for every solver stage."""

    def __init__(self, config_data: Optional[Dict[str, Any]] = None):
        if config_data is None:
            config_data = self._load_from_yaml()
        self.config = self._merge(config_data)
        self._apply_env_overrides()

    @staticmethod
    def _load_from_yaml() -> Dict[str, Any]:
        """Load config.yaml from CHARFLOW_CONFIG or the project root."""
        project_root = Path(__file__).resolve().parents[4]
        candidate_paths = []
        env_path = os.environ.get("CHARFLOW_CONFIG")
        if env_path:
            candidate_paths.append(Path(env_path).expanduser())
        candidate_paths.append(project_root / "config.yaml")

        for config_path in candidate_paths:
            if not config_path.exists():
                continue
            try:
                with open(config_path, "r", encoding="utf-8") as f:
                    data = yaml.safe_load(f)
                if data:
                    logger.debug(f"Loaded solver config from {config_path}")
                    return data
            except (OSError, yaml.YAMLError) as e:
                logger.warning(f"Failed to load config file at {config_path}: {e}")

        return {}

    @staticmethod
    def _merge(data: Dict[str, Any]) -> Dict[str, Dict[str, Any]]:
        merged = deepcopy(_DEFAULTS)
        for section, values in (data or {}).items():
            if not isinstance(values, dict):
                continue
            merged.setdefault(section, {}).update(values)
        return merged

    def _apply_env_overrides(self) -> None:
        threads = os.environ.get("CHARFLOW_THREADS", "").strip()
        if threads:
            try:
                self.config["runtime"]["threads"] = max(1, int(threads))
            except ValueError:
                logger.warning(f"Ignoring CHARFLOW_THREADS={threads!r}: not an integer")

    def section(self, name: str) -> Dict[str, Any]:
        return self.config.get(name, {})

    def get(self, section: str, key: str, default: Any = None) -> Any:
        return self.config.get(section, {}).get(key, default)

    @property
    def hamiltonian(self) -> Dict[str, Any]:
        return self.section("hamiltonian")

    @property
    def characteristics(self) -> Dict[str, Any]:
        return self.section("characteristics")

    @property
    def hjb(self) -> Dict[str, Any]:
        return self.section("hjb")

    @property
    def cost(self) -> Dict[str, Any]:
        return self.section("cost")

    @property
    def transport(self) -> Dict[str, Any]:
        return self.section("transport")

    @property
    def runtime(self) -> Dict[str, Any]:
        return self.section("runtime")


# Global instance for reuse
_solver_config_instance: Optional[SolverConfig] = None


def get_solver_config() -> SolverConfig:
    """Get or create the global SolverConfig instance."""
    global _solver_config_instance
    if _solver_config_instance is None:
        _solver_config_instance = SolverConfig()
    return _solver_config_instance


def reset_solver_config() -> None:
    """Drop the cached instance (tests change CHARFLOW_CONFIG)."""
    global _solver_config_instance
    _solver_config_instance = None

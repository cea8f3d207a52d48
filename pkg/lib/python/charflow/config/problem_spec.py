"""
Problem-spec files.
One YAML (or JSON) document describes the control problem, grids, measures and
pipeline parameters for every CLI command.
"""

import logging
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Optional

import yaml

from charflow.errors import CharflowUserError, SpecError
from charflow.expr import Expr, parse
from charflow.models import Boundary
from charflow.problem.control import ControlProblem

logger = logging.getLogger("charflow.config")

MIN_RESOLUTION = 3
COST_POLICIES = ("shooting", "transcription", "oracle", "closed_form")


@dataclass
class MeasureSpec:
    """A measure given by a CSV file, inline atoms, or a normal quantile discretisation."""

    path: Optional[str] = None
    atoms: Optional[List[List[float]]] = None
    weights: Optional[List[float]] = None
    quantile: Optional[Dict[str, float]] = None

    def load(self, dim: int):
        from charflow.io import read_measure_csv
        from charflow.transport import DiscreteMeasure, quantile_measure

        if self.path is not None:
            return read_measure_csv(self.path, dim)
        if self.quantile is not None:
            if dim != 1:
                raise SpecError("quantile measures are one-dimensional")
            q = self.quantile
            return quantile_measure(float(q.get("mean", 0.0)), float(q.get("std", 1.0)), int(q.get("count", 100)))
        atoms = [[float(a)] if not isinstance(a, (list, tuple)) else [float(v) for v in a] for a in self.atoms]
        if any(len(a) != dim for a in atoms):
            raise SpecError(f"inline atoms must have {dim} coordinates")
        if self.weights is None:
            return DiscreteMeasure.uniform(atoms)
        return DiscreteMeasure(atoms, [float(w) for w in self.weights])


@dataclass
class ProblemSpec:
    n: int
    m: int
    dynamics: List[str]
    lagrangian: str
    control_lo: List[Any]
    control_hi: List[Any]
    domain_lo: List[float]
    domain_hi: List[float]
    boundary: Boundary = Boundary.CLAMP
    horizon: float = 1.0
    grid_nodes: List[int] = field(default_factory=list)
    grid_dt: float = 0.01
    initial: Optional[str] = None
    char_seeds: List[int] = field(default_factory=list)
    char_lo: List[float] = field(default_factory=list)
    char_hi: List[float] = field(default_factory=list)
    char_dt: float = 1e-3
    char_horizon: Optional[float] = None
    mu0: Optional[MeasureSpec] = None
    mu1: Optional[MeasureSpec] = None
    transport_t1: float = 1.0
    transport_dt: float = 0.01
    transcription_intervals: int = 50
    cost_policy: str = "shooting"
    seed: int = 0
    source: Optional[str] = None

    @cached_property
    def problem(self) -> ControlProblem:
        return ControlProblem.build(
            self.dynamics,
            self.lagrangian,
            self.control_lo,
            self.control_hi,
            self.domain_lo,
            self.domain_hi,
            self.horizon,
            self.boundary,
        )

    def initial_expr(self) -> Expr:
        if not self.initial:
            raise SpecError("spec has no 'initial' expression")
        return parse(self.initial, (self.n, self.m))

    def grid(self):
        from charflow.hjb import GridSpec

        return GridSpec.over(self.domain_lo, self.domain_hi, self.grid_nodes)

    def measures(self):
        if self.mu0 is None or self.mu1 is None:
            raise SpecError("spec has no 'measures' section with mu0 and mu1")
        return self.mu0.load(self.n), self.mu1.load(self.n)


def load_problem_spec(path: str) -> ProblemSpec:
    """Read a spec file; relative measure paths resolve against its directory."""
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f)
    logger.debug(f"Loaded problem spec from {path}")
    spec = parse_problem_spec(data, os.path.dirname(os.path.abspath(path)))
    spec.source = os.path.abspath(path)
    return spec


def _section(data: Dict[str, Any], key: str) -> Dict[str, Any]:
    value = data.get(key) or {}
    if not isinstance(value, dict):
        raise SpecError(f"'{key}' must be a mapping")
    return value


def _list(value: Any, key: str, length: Optional[int] = None) -> List[Any]:
    if value is None:
        raise SpecError(f"missing '{key}'")
    items = list(value) if isinstance(value, (list, tuple)) else [value]
    if length is not None and len(items) != length:
        raise SpecError(f"'{key}' needs {length} entries, got {len(items)}")
    return items


def _floats(value: Any, key: str, length: Optional[int] = None) -> List[float]:
    try:
        return [float(v) for v in _list(value, key, length)]
    except (TypeError, ValueError):
        raise SpecError(f"'{key}' must contain numbers") from None


def _resolutions(value: Any, key: str, length: int) -> List[int]:
    counts = _list(value, key)
    if len(counts) == 1 and length > 1:
        counts = counts * length
    if len(counts) != length:
        raise SpecError(f"'{key}' needs {length} entries, got {len(counts)}")
    try:
        counts = [int(c) for c in counts]
    except (TypeError, ValueError):
        raise SpecError(f"'{key}' must contain integers") from None
    if any(c < MIN_RESOLUTION for c in counts):
        raise SpecError(f"'{key}' resolutions must be at least {MIN_RESOLUTION}, got {counts}")
    return counts


def _measure(value: Any, key: str, base_dir: str) -> MeasureSpec:
    if isinstance(value, str):
        path = value if os.path.isabs(value) else os.path.join(base_dir, value)
        if not os.path.exists(path):
            raise SpecError(f"measure file for '{key}' not found: {path}")
        return MeasureSpec(path=path)
    if isinstance(value, dict):
        if "quantile" in value:
            return MeasureSpec(quantile=dict(value["quantile"]))
        if "atoms" in value:
            weights = value.get("weights")
            if weights is not None and len(weights) != len(value["atoms"]):
                raise SpecError(f"'{key}' has {len(value['atoms'])} atoms but {len(weights)} weights")
            return MeasureSpec(atoms=list(value["atoms"]), weights=weights)
    raise SpecError(f"'{key}' must be a file path, {{atoms, weights}} or {{quantile: {{mean, std, count}}}}")


def parse_problem_spec(data: Any, base_dir: str = ".") -> ProblemSpec:
    try:
        return _parse(data, base_dir)
    except CharflowUserError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise SpecError(f"malformed problem spec: {e}") from None


def _parse(data: Any, base_dir: str) -> ProblemSpec:
    if not isinstance(data, dict):
        raise SpecError("problem spec must be a mapping")
    dims = _section(data, "dims")
    try:
        n, m = int(dims["n"]), int(dims["m"])
    except (KeyError, TypeError, ValueError):
        raise SpecError("'dims' needs integer n and m") from None
    if n < 1 or m < 1:
        raise SpecError(f"dims must be positive, got n={n}, m={m}")

    dynamics = [str(e) for e in _list(data.get("dynamics"), "dynamics", n)]
    if "lagrangian" not in data:
        raise SpecError("missing 'lagrangian'")
    control = _section(data, "control")
    domain = _section(data, "domain")
    boundary_text = str(data.get("boundary", "clamp")).lower()
    try:
        boundary = Boundary(boundary_text)
    except ValueError:
        raise SpecError(f"unknown boundary mode {boundary_text!r} (use clamp or periodic)") from None

    grid = _section(data, "grid")
    chars = _section(data, "characteristics")
    transport = _section(data, "transport")
    measures = _section(data, "measures")
    domain_lo = _floats(domain.get("lo"), "domain.lo", n)
    domain_hi = _floats(domain.get("hi"), "domain.hi", n)

    policy = str(transport.get("policy", "shooting"))
    if policy not in COST_POLICIES:
        raise SpecError(f"unknown cost policy {policy!r} (choose from {', '.join(COST_POLICIES)})")

    spec = ProblemSpec(
        n=n,
        m=m,
        dynamics=dynamics,
        lagrangian=str(data["lagrangian"]),
        control_lo=_list(control.get("lo"), "control.lo", m),
        control_hi=_list(control.get("hi"), "control.hi", m),
        domain_lo=domain_lo,
        domain_hi=domain_hi,
        boundary=boundary,
        horizon=float(data.get("horizon", 1.0)),
        grid_nodes=_resolutions(grid.get("nodes", [101]), "grid.nodes", n),
        grid_dt=float(grid.get("dt", 0.01)),
        initial=str(data["initial"]) if data.get("initial") is not None else None,
        char_seeds=_resolutions(chars.get("seeds", [41]), "characteristics.seeds", n),
        char_lo=_floats(chars.get("seed_lo", domain_lo), "characteristics.seed_lo", n),
        char_hi=_floats(chars.get("seed_hi", domain_hi), "characteristics.seed_hi", n),
        char_dt=float(chars.get("dt", 1e-3)),
        char_horizon=float(chars["horizon"]) if chars.get("horizon") is not None else None,
        mu0=_measure(measures["mu0"], "mu0", base_dir) if "mu0" in measures else None,
        mu1=_measure(measures["mu1"], "mu1", base_dir) if "mu1" in measures else None,
        transport_t1=float(transport.get("t1", 1.0)),
        transport_dt=float(transport.get("dt", 0.01)),
        transcription_intervals=int(transport.get("transcription_intervals", 50)),
        cost_policy=policy,
        seed=int(data.get("seed", 0)),
    )
    # fail early on expressions and boxes
    spec.problem
    if spec.initial is not None:
        spec.initial_expr()
    return spec

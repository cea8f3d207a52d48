"""CSV artefacts. Floats are written with 17 significant digits; infeasible costs as `inf`."""

import os
from typing import List, Sequence

import numpy as np
import pandas as pd

from charflow.errors import SpecError
from charflow.transport import DiscreteMeasure, KantorovichPair, MongeMap, TransportPlan

FLOAT_FORMAT = "%.17g"


def _columns(prefix: str, count: int) -> List[str]:
    return [f"{prefix}{k}" for k in range(count)]


def write_frame(df: pd.DataFrame, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_trajectories_csv(flow, path: str) -> str:
    """One row per (seed, time stamp): seed, t, x*, p*, u."""
    n = flow.n
    S = flow.seeds.shape[0]
    K1 = len(flow.times)
    seed_ids = np.repeat(np.arange(S), K1)
    X = flow.X.transpose(1, 0, 2).reshape(S * K1, n)
    P = flow.P.transpose(1, 0, 2).reshape(S * K1, n)
    U = flow.U.T.reshape(S * K1)
    df = pd.DataFrame({"seed": seed_ids, "t": np.tile(flow.times, S)})
    for k, name in enumerate(_columns("x", n)):
        df[name] = X[:, k]
    for k, name in enumerate(_columns("p", n)):
        df[name] = P[:, k]
    df["u"] = U
    return write_frame(df, path)


def write_value_grid_csv(vg, path: str) -> str:
    """One row per (time, node): t, x*, V."""
    pts = vg.grid.points()
    K1 = len(vg.times)
    df = pd.DataFrame({"t": np.repeat(vg.times, len(pts))})
    for k, name in enumerate(_columns("x", pts.shape[1])):
        df[name] = np.tile(pts[:, k], K1)
    df["V"] = vg.values.reshape(K1, -1).ravel()
    return write_frame(df, path)


def write_cost_matrix_csv(cm, path: str) -> str:
    I, J = cm.values.shape
    ii, jj = np.meshgrid(np.arange(I), np.arange(J), indexing="ij")
    df = pd.DataFrame(
        {
            "i": ii.ravel(),
            "j": jj.ravel(),
            "cost": cm.values.ravel(),
            "status": [s.value for s in cm.status.ravel()],
        }
    )
    return write_frame(df, path)


def write_plan_csv(plan: TransportPlan, path: str, min_mass: float = 1e-15) -> str:
    ii, jj = np.nonzero(plan.gamma > min_mass)
    df = pd.DataFrame({"i": ii, "j": jj, "mass": plan.gamma[ii, jj]})
    return write_frame(df, path)


def write_pair_csv(pair: KantorovichPair, path: str) -> str:
    """measure (0 source, 1 target), atom index, potential."""
    df = pd.DataFrame(
        {
            "measure": np.concatenate([np.zeros(len(pair.phi0), dtype=int), np.ones(len(pair.phi1), dtype=int)]),
            "index": np.concatenate([np.arange(len(pair.phi0)), np.arange(len(pair.phi1))]),
            "potential": np.concatenate([pair.phi0, pair.phi1]),
        }
    )
    return write_frame(df, path)


def write_monge_map_csv(mapping: MongeMap, path: str) -> str:
    n = mapping.atoms.shape[1]
    df = pd.DataFrame()
    for k, name in enumerate(_columns("x", n)):
        df[name] = mapping.atoms[:, k]
    for k, name in enumerate(_columns("p", n)):
        df[name] = mapping.p0[:, k]
    for k, name in enumerate(_columns("T", n)):
        df[name] = mapping.images[:, k]
    df["weight"] = mapping.weights
    df["accepted"] = mapping.accepted.astype(int)
    return write_frame(df, path)


def write_measure_csv(mu: DiscreteMeasure, path: str) -> str:
    df = pd.DataFrame({name: mu.atoms[:, k] for k, name in enumerate(_columns("x", mu.dim))})
    df["weight"] = mu.weights
    return write_frame(df, path)


def read_measure_csv(path: str, dim: int = None, normalise: bool = False) -> DiscreteMeasure:
    """Columns x..., weight (header row required). Weights must already sum to 1 unless normalise is set."""
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise SpecError(f"cannot read measure file {path}: {e}") from None
    if "weight" not in df.columns or df.shape[1] < 2:
        raise SpecError(f"measure file {path} needs coordinate columns and a 'weight' column")
    coords = df.drop(columns="weight")
    if dim is not None and coords.shape[1] != dim:
        raise SpecError(f"measure file {path} has {coords.shape[1]} coordinates, problem has {dim}")
    try:
        atoms = coords.to_numpy(dtype=float)
        weights = df["weight"].to_numpy(dtype=float)
    except ValueError as e:
        raise SpecError(f"non-numeric entry in {path}: {e}") from None
    if normalise:
        return DiscreteMeasure.normalised(atoms, weights)
    return DiscreteMeasure(atoms, weights)


def parse_vector(text: str, expected: int = None, name: str = "vector") -> np.ndarray:
    """'0.5,1' -> array([0.5, 1.0])."""
    try:
        values = np.array([float(v) for v in str(text).split(",") if v.strip()], dtype=float)
    except ValueError:
        raise SpecError(f"{name} must be comma-separated numbers, got {text!r}") from None
    if expected is not None and len(values) != expected:
        raise SpecError(f"{name} needs {expected} components, got {len(values)}")
    return values


def format_float(value: float) -> str:
    return FLOAT_FORMAT % value


def format_vector(values: Sequence[float]) -> str:
    return "[" + ", ".join(format_float(float(v)) for v in values) + "]"

"""Finite atomic probability measures."""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import norm, wasserstein_distance

from charflow.errors import SpecError

logger = logging.getLogger("charflow.transport")

WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    atoms: np.ndarray  # (k, n)
    weights: np.ndarray  # (k,)

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        weights = np.asarray(self.weights, dtype=float).ravel()
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        if atoms.shape[0] == 0:
            raise SpecError("a measure needs at least one atom")
        if atoms.shape[0] != weights.shape[0]:
            raise SpecError(f"{atoms.shape[0]} atoms but {weights.shape[0]} weights")
        if not np.all(np.isfinite(atoms)):
            raise SpecError("atoms must be finite")
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise SpecError("weights must be positive")
        if abs(weights.sum() - 1.0) > WEIGHT_TOL * max(1, len(weights)):
            raise SpecError(f"weights sum to {weights.sum():.15g}, expected 1")
        if len(np.unique(atoms, axis=0)) != len(atoms):
            raise SpecError("atoms must be distinct")

    @classmethod
    def uniform(cls, atoms) -> "DiscreteMeasure":
        atoms = np.asarray(atoms, dtype=float)
        count = atoms.shape[0]
        return cls(atoms, np.full(count, 1.0 / count))

    @classmethod
    def normalised(cls, atoms, weights) -> "DiscreteMeasure":
        weights = np.asarray(weights, dtype=float)
        return cls(atoms, weights / weights.sum())

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def mean(self) -> np.ndarray:
        return self.weights @ self.atoms

    def inside(self, lo: Sequence[float], hi: Sequence[float]) -> bool:
        return bool(np.all(self.atoms >= np.asarray(lo) - 1e-12) and np.all(self.atoms <= np.asarray(hi) + 1e-12))


def quantile_measure(mean: float, std: float, count: int) -> DiscreteMeasure:
    """Equal-weight discretisation of N(mean, std^2) at the mid-quantiles (k + 1/2) / count."""
    if count < 1 or std <= 0:
        raise SpecError("quantile measure needs count >= 1 and std > 0")
    levels = (np.arange(count) + 0.5) / count
    return DiscreteMeasure.uniform(mean + std * norm.ppf(levels)[:, None])


def merge_atoms(atoms: np.ndarray, weights: np.ndarray, tol: float = 1e-9) -> DiscreteMeasure:
    """Sum the weights of atoms closer than tol (greedy in lexicographic order)."""
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    weights = np.asarray(weights, dtype=float)
    order = np.lexsort(atoms.T[::-1])
    merged_atoms, merged_weights = [], []
    for idx in order:
        a, w = atoms[idx], weights[idx]
        for k, b in enumerate(merged_atoms):
            if np.max(np.abs(a - b)) <= tol:
                merged_weights[k] += w
                break
        else:
            merged_atoms.append(a)
            merged_weights.append(w)
    total = float(np.sum(merged_weights))
    return DiscreteMeasure(np.array(merged_atoms), np.array(merged_weights) / total)


def pushforward(mapping, mu: DiscreteMeasure, merge_tol: float = 1e-9) -> DiscreteMeasure:
    """t#mu for a point map (callable on one atom) or a MongeMap.

    Skipped atoms of a MongeMap are left out and the flowed mass is renormalised.
    """
    if hasattr(mapping, "images"):
        flowed = np.asarray(mapping.accepted, dtype=bool)
        if not flowed.any():
            raise SpecError("no atom of the map was flowed")
        images, weights = mapping.images[flowed], mapping.weights[flowed]
    elif callable(mapping):
        images = np.array([np.atleast_1d(np.asarray(mapping(a), dtype=float)) for a in mu.atoms])
        weights = mu.weights
    else:
        raise SpecError("pushforward needs a callable or a MongeMap")
    return merge_atoms(images, weights, merge_tol)


def wasserstein_1d(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    if mu.dim != 1 or nu.dim != 1:
        raise SpecError("wasserstein_1d applies to one-dimensional measures")
    return float(wasserstein_distance(mu.atoms[:, 0], nu.atoms[:, 0], mu.weights, nu.weights))


def atom_spacing(mu: DiscreteMeasure) -> float:
    """Largest gap between consecutive atoms of a 1-D measure."""
    if mu.dim != 1 or mu.size < 2:
        return 0.0
    return float(np.max(np.diff(np.sort(mu.atoms[:, 0]))))

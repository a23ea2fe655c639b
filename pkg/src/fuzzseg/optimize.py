"""Pieces shared by every population optimizer in the package."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["OptimizationResult", "check_bounds", "evaluate_batch", "make_rng"]


@dataclass(frozen=True)
class OptimizationResult:
    """Best point ever seen by a run, plus its best-so-far trace."""

    best_position: np.ndarray
    best_fitness: float
    trace: tuple[float, ...]
    evaluations: int
    degenerate_generations: int = 0
    info: dict = field(default_factory=dict)


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def check_bounds(lower, upper) -> tuple[np.ndarray, np.ndarray]:
    lower = np.asarray(lower, dtype=float).ravel()
    upper = np.asarray(upper, dtype=float).ravel()
    if lower.shape != upper.shape or lower.size == 0:
        raise ValueError("lower and upper bounds must be non-empty and the same length")
    if np.any(~np.isfinite(lower)) or np.any(~np.isfinite(upper)):
        raise ValueError("bounds must be finite")
    if np.any(lower >= upper):
        raise ValueError("every lower bound must be strictly below its upper bound")
    return lower, upper


def evaluate_batch(objective, positions: np.ndarray) -> np.ndarray:
    """Fitness of each row.  Objectives marked ``vectorized`` take the whole block."""
    if positions.shape[0] == 0:
        return np.empty(0)
    if getattr(objective, "vectorized", False):
        out = np.asarray(objective(positions), dtype=float).reshape(-1)
    else:
        out = np.fromiter((objective(row) for row in positions), dtype=float, count=positions.shape[0])
    if out.shape[0] != positions.shape[0]:
        raise ValueError("objective returned the wrong number of values")
    if np.any(np.isnan(out)):
        raise ValueError("objective returned NaN")
    return out

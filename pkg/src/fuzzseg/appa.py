"""Adaptive Plant Propagation Algorithm (APPA) for bounded maximization.

Each generation the population is ranked, fitness is squashed through a
sigmoid of ``f / max(f)``, and every plant sends out runners: fitter plants
send more, shorter runners, poorer plants fewer, longer ones.  Runners that
leave the search box are clamped back into it.  Parents and runners are
merged and truncated back to the population size, and plants that have gone
too long without a surviving offspring are replaced by fresh random points
(the incumbent best excepted).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .optimize import OptimizationResult, check_bounds, evaluate_batch, make_rng

__all__ = [
    "AppaConfig",
    "Individual",
    "appa_optimize",
    "normalize_fitness",
    "runner_count",
    "runner_offsets",
    "spawn_runner",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Individual:
    position: np.ndarray
    fitness: float
    stagnation: int = 0


@dataclass(frozen=True)
class AppaConfig:
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    population: int | None = None
    max_generations: int = 100
    max_runners: int = 3
    stagnation_limit: int = 10
    seed: int = 0

    def __post_init__(self):
        lower, upper = check_bounds(self.lower, self.upper)
        object.__setattr__(self, "lower", tuple(lower.tolist()))
        object.__setattr__(self, "upper", tuple(upper.tolist()))
        if self.population is None:
            object.__setattr__(self, "population", 10 * lower.size)
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.max_runners < 1:
            raise ValueError("max_runners must be >= 1")
        if self.max_generations < 1:
            raise ValueError("max_generations must be >= 1")
        if self.stagnation_limit < 1:
            raise ValueError("stagnation_limit must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    @property
    def dimensions(self) -> int:
        return len(self.lower)


def normalize_fitness(raw) -> tuple[np.ndarray, bool]:
    """Sigmoid of ``f / max(f)``.

    Returns the normalized values and a flag that is set when ``max(f) <= 0``,
    in which case every plant gets 0.5.
    """
    f = np.asarray(raw, dtype=float)
    if f.size == 0:
        raise ValueError("empty population")
    top = f.max()
    if not top > 0 or not math.isfinite(top):
        return np.full(f.shape, 0.5), True
    z = f / top
    return np.exp(z) / (1.0 + np.exp(z)), False


def runner_count(normalized: float, max_runners: int, r: float) -> int:
    return max(1, min(max_runners, math.ceil(max_runners * normalized * r)))


def runner_offsets(normalized: float, dimensions: int, rng: np.random.Generator) -> np.ndarray:
    return (1.0 - normalized) * (rng.random(dimensions) - 0.5)


def spawn_runner(parent: Individual, offsets, lower, upper, objective) -> Individual:
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    pos = np.clip(np.asarray(parent.position, dtype=float) + (upper - lower) * np.asarray(offsets), lower, upper)
    fitness = float(evaluate_batch(objective, pos[None, :])[0])
    return Individual(pos, fitness, 0)


def appa_optimize(objective, config: AppaConfig, rng=None) -> OptimizationResult:
    """Maximize ``objective`` over the box in ``config``.

    ``objective`` maps a position vector to a float; if it carries a truthy
    ``vectorized`` attribute it is called once per generation on the stacked
    ``(n, D)`` block of runners instead.
    """
    rng = make_rng(config.seed if rng is None else rng)
    lower = np.asarray(config.lower)
    upper = np.asarray(config.upper)
    span = upper - lower
    n_pop, dim = config.population, config.dimensions

    pos = lower + rng.random((n_pop, dim)) * span
    fit = evaluate_batch(objective, pos)
    stag = np.zeros(n_pop, dtype=np.int64)
    evaluations = n_pop
    degenerate = 0
    trace = []

    order = np.argsort(-fit, kind="stable")
    pos, fit = pos[order], fit[order]
    best_pos, best_fit = pos[0].copy(), fit[0]

    for gen in range(config.max_generations):
        norm, flagged = normalize_fitness(fit)
        if flagged:
            degenerate += 1
            log.debug("generation %d: max fitness <= 0, using uniform normalization", gen)

        r = rng.random(n_pop)
        counts = np.maximum(1, np.minimum(config.max_runners, np.ceil(config.max_runners * norm * r))).astype(np.int64)
        parent = np.repeat(np.arange(n_pop), counts)
        offsets = (1.0 - norm[parent, None]) * (rng.random((parent.size, dim)) - 0.5)
        kids = np.clip(pos[parent] + span * offsets, lower, upper)
        kid_fit = evaluate_batch(objective, kids)
        evaluations += kids.shape[0]

        merged_pos = np.vstack([pos, kids])
        merged_fit = np.concatenate([fit, kid_fit])
        merged_stag = np.concatenate([stag, np.zeros(kids.shape[0], dtype=np.int64)])
        keep = np.argsort(-merged_fit, kind="stable")[:n_pop]

        # a parent whose runners all died stagnates; one with a surviving runner resets
        surviving_kids = keep[keep >= n_pop] - n_pop
        propagated = np.zeros(n_pop, dtype=bool)
        propagated[parent[surviving_kids]] = True
        merged_stag[:n_pop] = np.where(propagated, 0, stag + 1)

        pos, fit, stag = merged_pos[keep], merged_fit[keep], merged_stag[keep]

        if fit[0] > best_fit:
            best_pos, best_fit = pos[0].copy(), fit[0]

        stale = np.flatnonzero(stag > config.stagnation_limit)
        stale = stale[stale != 0]
        if stale.size:
            pos[stale] = lower + rng.random((stale.size, dim)) * span
            fit[stale] = evaluate_batch(objective, pos[stale])
            stag[stale] = 0
            evaluations += stale.size
            order = np.argsort(-fit, kind="stable")
            pos, fit, stag = pos[order], fit[order], stag[order]
            if fit[0] > best_fit:
                best_pos, best_fit = pos[0].copy(), fit[0]

        trace.append(float(best_fit))

    return OptimizationResult(
        best_position=best_pos,
        best_fitness=float(best_fit),
        trace=tuple(trace),
        evaluations=evaluations,
        degenerate_generations=degenerate,
    )

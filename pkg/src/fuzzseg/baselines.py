"""Textbook PSO, GA and GSA maximizers used as comparison baselines.

All three share the APPA calling convention: a bounded box, a population
size (default ``10 * D``), a generation budget and a seed, and they return an
:class:`~fuzzseg.optimize.OptimizationResult` whose trace holds the
best-so-far fitness after every generation.  Each spends ``population``
evaluations on initialization and ``population`` per generation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .optimize import OptimizationResult, check_bounds, evaluate_batch, make_rng

__all__ = ["BaselineConfig", "ga_optimize", "gsa_optimize", "optimize", "pso_optimize"]

ALGORITHMS = ("pso", "ga", "gsa")


@dataclass(frozen=True)
class BaselineConfig:
    algorithm: str
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    population: int | None = None
    max_generations: int = 100
    seed: int = 0
    # PSO
    inertia: float = 0.729
    cognitive: float = 1.494
    social: float = 1.494
    velocity_clamp: float = 0.2
    # GA
    crossover_rate: float = 0.9
    mutation_rate: float | None = None
    tournament_size: int = 2
    mutation_scale: float = 0.1
    blend_alpha: float = 0.1
    # GSA
    g0: float = 100.0
    decay: float = 20.0

    def __post_init__(self):
        algo = self.algorithm.lower()
        if algo not in ALGORITHMS:
            raise ValueError(f"unknown baseline {self.algorithm!r}; expected one of {ALGORITHMS}")
        object.__setattr__(self, "algorithm", algo)
        lower, upper = check_bounds(self.lower, self.upper)
        object.__setattr__(self, "lower", tuple(lower.tolist()))
        object.__setattr__(self, "upper", tuple(upper.tolist()))
        if self.population is None:
            object.__setattr__(self, "population", 10 * lower.size)
        if self.mutation_rate is None:
            object.__setattr__(self, "mutation_rate", 1.0 / lower.size)
        if self.population < 1:
            raise ValueError("population must be positive")
        if self.max_generations < 1:
            raise ValueError("max_generations must be positive")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be positive")
        if not 0 <= self.crossover_rate <= 1 or not 0 <= self.mutation_rate <= 1:
            raise ValueError("crossover and mutation rates must lie in [0, 1]")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    @property
    def dimensions(self) -> int:
        return len(self.lower)


class _Tracker:
    def __init__(self):
        self.position = None
        self.fitness = -np.inf
        self.trace = []
        self.evaluations = 0

    def offer(self, pos: np.ndarray, fit: np.ndarray) -> None:
        self.evaluations += fit.size
        i = int(np.argmax(fit))
        if self.position is None or fit[i] > self.fitness:
            self.position, self.fitness = pos[i].copy(), float(fit[i])

    def close_generation(self) -> None:
        self.trace.append(self.fitness)

    def result(self) -> OptimizationResult:
        return OptimizationResult(self.position, self.fitness, tuple(self.trace), self.evaluations)


def _setup(config: BaselineConfig, rng):
    rng = make_rng(config.seed if rng is None else rng)
    lower, upper = np.asarray(config.lower), np.asarray(config.upper)
    pos = lower + rng.random((config.population, config.dimensions)) * (upper - lower)
    return rng, lower, upper, pos


def pso_optimize(objective, config: BaselineConfig, rng=None, initial_velocity=None) -> OptimizationResult:
    """Global-best PSO with inertia weight and velocity clamping."""
    rng, lower, upper, pos = _setup(config, rng)
    vmax = config.velocity_clamp * (upper - lower)
    if initial_velocity is None:
        vel = (rng.random(pos.shape) * 2 - 1) * vmax
    else:
        vel = np.broadcast_to(np.asarray(initial_velocity, dtype=float), pos.shape).copy()
    track = _Tracker()
    fit = evaluate_batch(objective, pos)
    track.offer(pos, fit)
    pbest, pbest_fit = pos.copy(), fit.copy()

    for _ in range(config.max_generations):
        gbest = pbest[int(np.argmax(pbest_fit))]
        r1 = rng.random(pos.shape)
        r2 = rng.random(pos.shape)
        vel = (config.inertia * vel
               + config.cognitive * r1 * (pbest - pos)
               + config.social * r2 * (gbest - pos))
        vel = np.clip(vel, -vmax, vmax)
        pos = np.clip(pos + vel, lower, upper)
        fit = evaluate_batch(objective, pos)
        track.offer(pos, fit)
        better = fit > pbest_fit
        pbest[better], pbest_fit[better] = pos[better], fit[better]
        track.close_generation()
    return track.result()


def _tournament(fit: np.ndarray, size: int, count: int, rng) -> np.ndarray:
    entrants = rng.integers(0, fit.size, size=(count, size))
    return entrants[np.arange(count), np.argmax(fit[entrants], axis=1)]


def ga_optimize(objective, config: BaselineConfig, rng=None) -> OptimizationResult:
    """Real-coded GA: tournament selection, BLX-alpha crossover, Gaussian mutation, one elite."""
    rng, lower, upper, pos = _setup(config, rng)
    n, dim = pos.shape
    span = upper - lower
    track = _Tracker()
    fit = evaluate_batch(objective, pos)
    track.offer(pos, fit)

    for _ in range(config.max_generations):
        elite = int(np.argmax(fit))
        n_children = n - 1
        pairs = (n_children + 1) // 2
        mothers = pos[_tournament(fit, config.tournament_size, pairs, rng)]
        fathers = pos[_tournament(fit, config.tournament_size, pairs, rng)]

        cross = rng.random(pairs) < config.crossover_rate
        lo = np.minimum(mothers, fathers)
        hi = np.maximum(mothers, fathers)
        ext = config.blend_alpha * (hi - lo)
        u1 = rng.random((pairs, dim))
        u2 = rng.random((pairs, dim))
        child1 = np.where(cross[:, None], lo - ext + u1 * (hi - lo + 2 * ext), mothers)
        child2 = np.where(cross[:, None], lo - ext + u2 * (hi - lo + 2 * ext), fathers)
        children = np.vstack([child1, child2])[:n_children]

        mutate = rng.random(children.shape) < config.mutation_rate
        noise = rng.standard_normal(children.shape) * (config.mutation_scale * span)
        children = np.clip(children + np.where(mutate, noise, 0.0), lower, upper)

        child_fit = evaluate_batch(objective, children)
        track.offer(children, child_fit)
        pos = np.vstack([pos[elite][None, :], children])
        fit = np.concatenate([[fit[elite]], child_fit])
        track.close_generation()
    return track.result()


def gsa_optimize(objective, config: BaselineConfig, rng=None) -> OptimizationResult:
    """Gravitational search with exponentially decaying G and a shrinking Kbest set.

    Agents move in coordinates rescaled to the unit box, so ``g0`` does not
    depend on the width of the search range.
    """
    rng, lower, upper, pos = _setup(config, rng)
    span = upper - lower
    n, dim = pos.shape
    unit = (pos - lower) / span
    vel = np.zeros_like(unit)
    track = _Tracker()
    fit = evaluate_batch(objective, pos)
    track.offer(pos, fit)
    eps = np.finfo(float).eps

    for t in range(config.max_generations):
        g = config.g0 * np.exp(-config.decay * t / config.max_generations)
        finite = np.isfinite(fit)
        if finite.any() and fit[finite].max() > fit[finite].min():
            best, worst = fit[finite].max(), fit[finite].min()
            m = np.where(finite, (fit - worst) / (best - worst), 0.0)
            mass = m / m.sum()
        else:
            mass = np.full(n, 1.0 / n)

        kbest = max(1, int(round(n - (n - 1) * t / max(1, config.max_generations - 1))))
        heavy = np.argsort(-mass, kind="stable")[:kbest]

        diff = unit[None, heavy, :] - unit[:, None, :]             # (n, k, dim)
        dist = np.sqrt((diff ** 2).sum(axis=2))                     # (n, k)
        coef = g * mass[heavy][None, :] / (dist + eps)
        coef[heavy[None, :] == np.arange(n)[:, None]] = 0.0
        acc = (rng.random((n, kbest, dim)) * coef[:, :, None] * diff).sum(axis=1)

        vel = rng.random((n, dim)) * vel + acc
        unit = np.clip(unit + vel, 0.0, 1.0)
        pos = lower + unit * span
        fit = evaluate_batch(objective, pos)
        track.offer(pos, fit)
        track.close_generation()
    return track.result()


_DISPATCH = {"pso": pso_optimize, "ga": ga_optimize, "gsa": gsa_optimize}


def optimize(objective, config: BaselineConfig, rng=None) -> OptimizationResult:
    return _DISPATCH[config.algorithm](objective, config, rng)

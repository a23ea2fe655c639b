"""Type-II fuzzy entropy of a gray-level histogram.

Each of the ``LV + 1`` segmentation levels gets a trapezoidal membership
function over the gray values.  The membership is bracketed by an upper and a
lower bound built with a linguistic hedge (``mu ** (1/alpha)`` and
``mu ** alpha``); the histogram-weighted width of that band is the level's
ultra-fuzziness, and the entropy of the normalized band distribution is the
level's entropy.  The sum over levels is the fitness maximized by the
optimizers.

Two evaluation paths are provided: scalar functions that mirror the
definitions one level at a time, and :class:`EntropyObjective`, which scores a
whole batch of candidate parameter vectors with array arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .imageio import Histogram

__all__ = [
    "CollapsedThresholdsError",
    "EntropyObjective",
    "FuzzyParams",
    "HedgeConfig",
    "ThresholdSet",
    "bound_memberships",
    "level_entropy",
    "membership",
    "membership_matrix",
    "round_half_up",
    "thresholds_from_params",
    "total_entropy",
    "ultra_fuzziness",
]


class CollapsedThresholdsError(ValueError):
    """Two thresholds derived from a parameter vector round to the same level."""


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class HedgeConfig:
    alpha: float = 2.0

    def __post_init__(self):
        if not (self.alpha > 1.0) or not math.isfinite(self.alpha):
            raise ValueError(f"hedge exponent must be finite and > 1, got {self.alpha}")


@dataclass(frozen=True, eq=False)
class FuzzyParams:
    """Membership breakpoints ``(a_1, c_1, ..., a_LV, c_LV)``.

    The boundary members ``a_0 = c_0 = 0`` and ``a_{LV+1} = c_{LV+1} = L-1``
    are implied and never stored.  Use :meth:`canonical` to build an instance
    from an unconstrained optimizer vector.
    """

    values: np.ndarray
    levels: int = 256

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if values.size == 0 or values.size % 2:
            raise ValueError(f"expected an even, non-zero number of parameters, got {values.size}")
        if self.levels < 2:
            raise ValueError("levels must be >= 2")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def canonical(cls, raw: Sequence[float], levels: int = 256) -> "FuzzyParams":
        """Sort ascending, then clamp into ``[0, L-1]``."""
        values = np.clip(np.sort(np.asarray(raw, dtype=float).ravel()), 0.0, levels - 1.0)
        return cls(values, levels)

    @property
    def lv(self) -> int:
        return self.values.size // 2

    @property
    def a(self) -> np.ndarray:
        return self.values[0::2]

    @property
    def c(self) -> np.ndarray:
        return self.values[1::2]

    def is_canonical(self) -> bool:
        v = self.values
        return bool(np.all(np.diff(v) >= 0) and v[0] >= 0 and v[-1] <= self.levels - 1)

    def breakpoints(self) -> tuple[np.ndarray, np.ndarray]:
        """``a`` and ``c`` extended with the implicit boundary members."""
        top = self.levels - 1.0
        a = np.concatenate(([0.0], self.a, [top]))
        c = np.concatenate(([0.0], self.c, [top]))
        return a, c

    def tolist(self) -> list[float]:
        return [float(v) for v in self.values]

    def __eq__(self, other):
        if not isinstance(other, FuzzyParams):
            return NotImplemented
        return self.levels == other.levels and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.levels, self.values.tobytes()))

    def __repr__(self):
        return f"FuzzyParams({self.tolist()}, levels={self.levels})"


@dataclass(frozen=True)
class ThresholdSet:
    thresholds: tuple[int, ...]

    def __post_init__(self):
        t = tuple(int(x) for x in self.thresholds)
        if not t:
            raise ValueError("a threshold set needs at least one threshold")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise CollapsedThresholdsError(f"thresholds must be strictly increasing, got {t}")
        object.__setattr__(self, "thresholds", t)

    def __len__(self):
        return len(self.thresholds)

    def __iter__(self):
        return iter(self.thresholds)

    def __getitem__(self, i):
        return self.thresholds[i]

    def tolist(self) -> list[int]:
        return list(self.thresholds)


def _check_level(k: int, lv: int) -> None:
    if not 1 <= k <= lv + 1:
        raise IndexError(f"level index {k} outside 1..{lv + 1}")


def _trapezoid(i, ap, cp, an, cn):
    """Trapezoid rising on (ap, cp], flat on (cp, an], falling on (an, cn].

    Works elementwise on broadcastable arrays.  Zero-width ramps fall through
    to the neighbouring zone, which gives step semantics without dividing.
    """
    rise_w = cp - ap
    fall_w = cn - an
    # ratios outside their own zone are discarded below and may overflow
    with np.errstate(over="ignore"):
        rise = np.divide(i - ap, rise_w, out=np.ones(np.broadcast(i, rise_w).shape), where=rise_w > 0)
        fall = np.divide(cn - i, fall_w, out=np.zeros(np.broadcast(i, fall_w).shape), where=fall_w > 0)
    return np.where(
        i <= ap, 0.0,
        np.where(i <= cp, rise,
                 np.where(i <= an, 1.0,
                          np.where(i <= cn, fall, 0.0))))


def membership(params: FuzzyParams, k: int, i) -> float | np.ndarray:
    """Membership of gray value(s) ``i`` in level ``k`` (1-based)."""
    _check_level(k, params.lv)
    a, c = params.breakpoints()
    out = _trapezoid(np.asarray(i, dtype=float), a[k - 1], c[k - 1], a[k], c[k])
    return float(out) if out.ndim == 0 else out


def membership_matrix(params: FuzzyParams) -> np.ndarray:
    """Memberships of every gray value in every level, shape ``(LV+1, L)``."""
    a, c = params.breakpoints()
    i = np.arange(params.levels, dtype=float)[None, :]
    return _trapezoid(i, a[:-1, None], c[:-1, None], a[1:, None], c[1:, None])


def bound_memberships(mu, hedge: HedgeConfig = HedgeConfig()):
    """Upper and lower membership from a hedge: ``(mu**(1/alpha), mu**alpha)``."""
    mu = np.asarray(mu, dtype=float)
    high = mu ** (1.0 / hedge.alpha)
    low = mu ** hedge.alpha
    if high.ndim == 0:
        return float(high), float(low)
    return high, low


def _band(hist: Histogram, params: FuzzyParams, k: int, hedge: HedgeConfig) -> np.ndarray:
    if hist.levels != params.levels:
        raise ValueError(f"histogram has {hist.levels} levels, params expect {params.levels}")
    mu = membership(params, k, np.arange(params.levels))
    high, low = bound_memberships(mu, hedge)
    return hist.bins * (high - low)


def ultra_fuzziness(hist: Histogram, params: FuzzyParams, k: int, hedge: HedgeConfig = HedgeConfig()) -> float:
    return float(_band(hist, params, k, hedge).sum())


def _entropy_of_band(band: np.ndarray) -> float:
    total = band.sum()
    if total <= 0:
        return 0.0
    q = band[band > 0] / total
    return float(-(q * np.log(q)).sum())


def level_entropy(hist: Histogram, params: FuzzyParams, k: int, hedge: HedgeConfig = HedgeConfig()) -> float:
    return _entropy_of_band(_band(hist, params, k, hedge))


def total_entropy(hist: Histogram, params, hedge: HedgeConfig = HedgeConfig()) -> float:
    """Sum of the level entropies; raw vectors are canonicalized first."""
    if not isinstance(params, FuzzyParams) or not params.is_canonical():
        raw = params.values if isinstance(params, FuzzyParams) else params
        params = FuzzyParams.canonical(raw, hist.levels)
    return sum(level_entropy(hist, params, k, hedge) for k in range(1, params.lv + 2))


def thresholds_from_params(params: FuzzyParams) -> ThresholdSet:
    """Midpoint of each ``(a_n, c_n)`` pair, rounded half up."""
    return ThresholdSet(tuple(round_half_up(0.5 * (a + c)) for a, c in zip(params.a, params.c)))


class EntropyObjective:
    """Batched total entropy over raw (unsorted) parameter vectors.

    Calling the objective on an ``(n, 2*LV)`` array returns ``n`` fitness
    values; a 1-D vector returns a float.  With ``reject_collapsed`` set,
    candidates whose rounded thresholds collide score ``-inf``.
    """

    vectorized = True

    def __init__(self, hist: Histogram, lv: int, hedge: HedgeConfig = HedgeConfig(),
                 reject_collapsed: bool = True):
        if lv < 1:
            raise ValueError("need at least one threshold")
        self.hist = hist
        self.lv = lv
        self.hedge = hedge
        self.reject_collapsed = reject_collapsed
        self._grid = np.arange(hist.levels, dtype=float)

    @property
    def dimensions(self) -> int:
        return 2 * self.lv

    def __call__(self, positions) -> float | np.ndarray:
        x = np.asarray(positions, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.dimensions:
            raise ValueError(f"expected {self.dimensions} parameters per candidate, got {x.shape[1]}")
        out = self.evaluate(x)
        return float(out[0]) if single else out

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        top = self.hist.levels - 1.0
        v = np.clip(np.sort(x, axis=1), 0.0, top)
        n = v.shape[0]
        zeros = np.zeros((n, 1))
        tops = np.full((n, 1), top)
        a = np.hstack([zeros, v[:, 0::2], tops])
        c = np.hstack([zeros, v[:, 1::2], tops])
        i = self._grid[None, None, :]
        mu = _trapezoid(i, a[:, :-1, None], c[:, :-1, None], a[:, 1:, None], c[:, 1:, None])
        band = self.hist.bins * (mu ** (1.0 / self.hedge.alpha) - mu ** self.hedge.alpha)
        totals = band.sum(axis=2, keepdims=True)
        q = np.divide(band, totals, out=np.zeros_like(band), where=totals > 0)
        logq = np.log(q, out=np.zeros_like(q), where=q > 0)
        fitness = -(q * logq).sum(axis=(1, 2))
        if self.reject_collapsed and self.lv > 1:
            t = np.floor(0.5 * (v[:, 0::2] + v[:, 1::2]) + 0.5)
            fitness[np.any(np.diff(t, axis=1) <= 0, axis=1)] = -np.inf
        return fitness

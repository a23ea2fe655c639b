"""Multi-run experiments: images x threshold counts x algorithms x seeds.

Every run is an independent cell seeded with ``base_seed + run_index``, so
any subset can be re-run on its own.  Cells may execute in worker processes;
aggregation happens afterwards in a fixed order, which keeps the reports
byte-identical between runs (apart from wall-clock fields).
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .appa import AppaConfig, appa_optimize
from .baselines import BaselineConfig, optimize as baseline_optimize
from .fuzzy_entropy import EntropyObjective, FuzzyParams, HedgeConfig, ThresholdSet, thresholds_from_params
from .imageio import GrayImage, Histogram, compute_histogram, load_gray_image
from .optimize import OptimizationResult

__all__ = [
    "ALGORITHMS",
    "CellSummary",
    "ExperimentConfig",
    "ExperimentResult",
    "RunRecord",
    "emit_reports",
    "run_cell",
    "run_experiment",
    "search_bounds",
    "summarize",
]

log = logging.getLogger(__name__)

ALGORITHMS = ("appa", "pso", "ga", "gsa")


@dataclass(frozen=True)
class ExperimentConfig:
    generations: int = 100
    population: int | None = None
    max_runners: int = 3
    stagnation_limit: int = 10
    alpha: float = 2.0
    bounds: str = "image"
    baseline_options: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.bounds not in ("image", "full"):
            raise ValueError("bounds must be 'image' or 'full'")
        if self.generations < 1:
            raise ValueError("generations must be positive")
        if self.population is not None and self.population < 2:
            raise ValueError("population must be >= 2")
        HedgeConfig(self.alpha)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["baseline_options"] = dict(sorted(self.baseline_options.items()))
        return d


@dataclass(frozen=True)
class RunRecord:
    algorithm: str
    image_id: str
    lv: int
    seed: int
    best_fitness: float
    best_params: FuzzyParams
    thresholds: ThresholdSet
    trace: tuple[float, ...]
    wall_time: float
    evaluations: int = 0

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "image_id": self.image_id,
            "lv": self.lv,
            "seed": self.seed,
            "best_fitness": self.best_fitness,
            "best_params": self.best_params.tolist(),
            "thresholds": self.thresholds.tolist(),
            "evaluations": self.evaluations,
            "trace": list(self.trace),
            "wall_time": self.wall_time,
        }


@dataclass(frozen=True)
class CellSummary:
    image_id: str
    lv: int
    algorithm: str
    f_mean: float
    f_std: float
    mean_wall_time: float
    runs: int


@dataclass
class ExperimentResult:
    summary: dict[tuple[str, int, str], CellSummary]
    records: list[RunRecord]
    failures: dict[str, str]
    base_seed: int = 0
    config: ExperimentConfig = field(default_factory=ExperimentConfig)


def search_bounds(hist: Histogram, lv: int, mode: str = "image") -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Per-dimension box; ``image`` spans the gray levels actually present."""
    top = hist.levels - 1
    lo, hi = hist.nonzero_range() if mode == "image" else (0, top)
    if lo >= hi:
        # single-valued histogram: nothing to bracket, fall back to the full range
        lo, hi = 0, top
    d = 2 * lv
    return (float(lo),) * d, (float(hi),) * d


def run_cell(image_id: str, hist: Histogram, lv: int, algorithm: str, seed: int,
             config: ExperimentConfig = ExperimentConfig()) -> RunRecord:
    algorithm = algorithm.lower()
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    objective = EntropyObjective(hist, lv, HedgeConfig(config.alpha))
    lower, upper = search_bounds(hist, lv, config.bounds)
    start = time.perf_counter()
    if algorithm == "appa":
        result: OptimizationResult = appa_optimize(objective, AppaConfig(
            lower, upper,
            population=config.population,
            max_generations=config.generations,
            max_runners=config.max_runners,
            stagnation_limit=config.stagnation_limit,
            seed=seed,
        ))
    else:
        result = baseline_optimize(objective, BaselineConfig(
            algorithm, lower, upper,
            population=config.population,
            max_generations=config.generations,
            seed=seed,
            **config.baseline_options,
        ))
    wall = time.perf_counter() - start
    if not math.isfinite(result.best_fitness):
        raise RuntimeError(f"{algorithm} found no candidate with distinct thresholds for {image_id}, lv={lv}")
    params = FuzzyParams.canonical(result.best_position, hist.levels)
    return RunRecord(
        algorithm=algorithm,
        image_id=image_id,
        lv=lv,
        seed=seed,
        best_fitness=result.best_fitness,
        best_params=params,
        thresholds=thresholds_from_params(params),
        trace=result.trace,
        wall_time=wall,
        evaluations=result.evaluations,
    )


def _run_cell_args(args) -> RunRecord:
    return run_cell(*args)


def _population_std(values: list[float]) -> float:
    n = len(values)
    mean = math.fsum(values) / n
    return math.sqrt(math.fsum((v - mean) ** 2 for v in values) / n)


def summarize(records: Iterable[RunRecord]) -> dict[tuple[str, int, str], CellSummary]:
    """Population mean/std per (image, lv, algorithm); independent of input order."""
    cells: dict[tuple[str, int, str], list[RunRecord]] = {}
    for rec in records:
        cells.setdefault((rec.image_id, rec.lv, rec.algorithm), []).append(rec)
    out = {}
    for key in sorted(cells, key=_cell_order):
        runs = sorted(cells[key], key=lambda r: r.seed)
        fits = [r.best_fitness for r in runs]
        out[key] = CellSummary(
            image_id=key[0], lv=key[1], algorithm=key[2],
            f_mean=math.fsum(fits) / len(fits),
            f_std=_population_std(fits),
            mean_wall_time=math.fsum(r.wall_time for r in runs) / len(runs),
            runs=len(runs),
        )
    return out


def _cell_order(key):
    image, lv, algo = key
    rank = ALGORITHMS.index(algo) if algo in ALGORITHMS else len(ALGORITHMS)
    return image, lv, rank, algo


def default_workers() -> int:
    env = os.environ.get("FUZZSEG_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"FUZZSEG_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise ValueError("FUZZSEG_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def _load_images(images) -> tuple[dict[str, Histogram], dict[str, str]]:
    if isinstance(images, Mapping):
        items = list(images.items())
    else:
        items = [(Path(p).stem, p) for p in images]
    hists, failures = {}, {}
    for image_id, src in items:
        try:
            if isinstance(src, Histogram):
                hists[image_id] = src
            elif isinstance(src, GrayImage):
                hists[image_id] = compute_histogram(src)
            else:
                hists[image_id] = compute_histogram(load_gray_image(src))
        except (OSError, ValueError) as exc:
            log.error("skipping image %s: %s", image_id, exc)
            failures[image_id] = str(exc)
    return hists, failures


def run_experiment(images, lv_list: Iterable[int], algorithms: Iterable[str] = ALGORITHMS,
                   runs_per_cell: int = 10, base_seed: int = 0,
                   config: ExperimentConfig = ExperimentConfig(),
                   workers: int | None = None) -> ExperimentResult:
    """Run every (image, lv, algorithm, run) cell and aggregate.

    ``images`` is a sequence of paths (ids are file stems) or a mapping from
    id to a path, :class:`GrayImage` or :class:`Histogram`.  Images that fail
    to load are reported in ``failures`` and skipped.
    """
    lv_list = [int(lv) for lv in lv_list]
    algorithms = [a.lower() for a in algorithms]
    if runs_per_cell < 1:
        raise ValueError("runs_per_cell must be positive")
    if not lv_list or any(lv < 1 for lv in lv_list):
        raise ValueError("threshold counts must be >= 1")
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {a!r}")
    hists, failures = _load_images(images)

    tasks = [
        (image_id, hist, lv, algo, base_seed + run, config)
        for image_id, hist in hists.items()
        for lv in lv_list
        for algo in algorithms
        for run in range(runs_per_cell)
    ]
    workers = default_workers() if workers is None else workers
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            records = list(pool.map(_run_cell_args, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        records = [_run_cell_args(t) for t in tasks]
    return ExperimentResult(summarize(records), records, failures, base_seed, config)


# --- reports ---------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path: Path, header: list[str], rows: Iterable[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _best_runs(records: Iterable[RunRecord]) -> dict[tuple[str, int, str], RunRecord]:
    best: dict[tuple[str, int, str], RunRecord] = {}
    for rec in sorted(records, key=lambda r: r.seed):
        key = (rec.image_id, rec.lv, rec.algorithm)
        if key not in best or rec.best_fitness > best[key].best_fitness:
            best[key] = rec
    return best


def _slug(text: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in text)


def emit_reports(result: ExperimentResult, out_dir) -> list[Path]:
    """Write params_thresholds.csv, comparison.csv, convergence/*.csv and summary.json."""
    if not result.summary:
        raise ValueError("nothing to report: the experiment produced no runs")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    conv_dir = out_dir / "convergence"
    conv_dir.mkdir(exist_ok=True)
    written = []

    best = _best_runs(result.records)
    path = out_dir / "params_thresholds.csv"
    _write_csv(path, ["image", "lv", "algorithm", "seed", "fuzzy_parameters", "thresholds"], (
        [rec.image_id, rec.lv, rec.algorithm, rec.seed,
         " ".join(f"{v:.6f}" for v in rec.best_params.values),
         " ".join(str(t) for t in rec.thresholds)]
        for key, rec in sorted(best.items(), key=lambda kv: _cell_order(kv[0]))
    ))
    written.append(path)

    path = out_dir / "comparison.csv"
    _write_csv(path, ["image", "lv", "algorithm", "f_mean", "f_std_population", "mean_wall_time", "runs"], (
        [c.image_id, c.lv, c.algorithm, _fmt(c.f_mean), _fmt(c.f_std), f"{c.mean_wall_time:.6f}", c.runs]
        for c in result.summary.values()
    ))
    written.append(path)

    by_cell: dict[tuple[str, int, str], list[RunRecord]] = {}
    for rec in result.records:
        by_cell.setdefault((rec.image_id, rec.lv, rec.algorithm), []).append(rec)
    for key in result.summary:
        runs = sorted(by_cell[key], key=lambda r: r.seed)
        traces = np.array([r.trace for r in runs])
        mean_trace = traces.mean(axis=0)
        path = conv_dir / f"{_slug(key[0])}_lv{key[1]}_{key[2]}.csv"
        _write_csv(path, ["generation", "best_fitness"],
                   ([g + 1, _fmt(v)] for g, v in enumerate(mean_trace)))
        written.append(path)

    payload = {
        "base_seed": result.base_seed,
        "alpha": result.config.alpha,
        "config": result.config.to_dict(),
        "std": "population (divide by n)",
        "failures": dict(sorted(result.failures.items())),
        "cells": [asdict(c) for c in result.summary.values()],
        "runs": [r.to_dict() for r in sorted(result.records, key=lambda r: (_cell_order((r.image_id, r.lv, r.algorithm)), r.seed))],
    }
    path = out_dir / "summary.json"
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8", newline="\n")
    written.append(path)
    return written

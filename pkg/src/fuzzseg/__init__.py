"""Multi-level gray-image thresholding by Type-II fuzzy entropy maximization."""

__version__ = "0.1.0"

from .appa import AppaConfig, appa_optimize
from .baselines import BaselineConfig, ga_optimize, gsa_optimize, pso_optimize
from .fuzzy_entropy import (
    EntropyObjective,
    FuzzyParams,
    HedgeConfig,
    ThresholdSet,
    thresholds_from_params,
    total_entropy,
)
from .harness import ExperimentConfig, RunRecord, emit_reports, run_experiment
from .imageio import GrayImage, Histogram, compute_histogram, load_gray_image, render_segmented

__all__ = [
    "AppaConfig",
    "BaselineConfig",
    "EntropyObjective",
    "ExperimentConfig",
    "FuzzyParams",
    "GrayImage",
    "HedgeConfig",
    "Histogram",
    "RunRecord",
    "ThresholdSet",
    "appa_optimize",
    "compute_histogram",
    "emit_reports",
    "ga_optimize",
    "gsa_optimize",
    "load_gray_image",
    "pso_optimize",
    "render_segmented",
    "run_experiment",
    "thresholds_from_params",
    "total_entropy",
]

"""Command-line interface: ``fuzzseg segment | benchmark | histogram``.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 internal error.
"""
from __future__ import annotations

import argparse
import json
import logging
import secrets
import sys
from pathlib import Path

from . import __version__
from .harness import ALGORITHMS, ExperimentConfig, emit_reports, run_cell, run_experiment
from .imageio import (
    ImageFormatError,
    compute_histogram,
    load_gray_image,
    render_segmented,
    save_gray_image,
    write_histogram_csv,
)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INTERNAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _alpha(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value > 1:
        raise argparse.ArgumentTypeError(f"hedge exponent must be > 1, got {value}")
    return value


def _seed(text: str):
    if text == "random":
        return "random"
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer or 'random', got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _resolve_seed(seed) -> int:
    return secrets.randbits(63) if seed == "random" else seed


def _add_search_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--generations", type=_positive_int, default=100, help="generations per run")
    p.add_argument("--population", type=_positive_int, default=None,
                   help="population size (default: 10 x search dimensions)")
    p.add_argument("--n-max", type=_positive_int, default=3, help="maximum runners per plant (APPA)")
    p.add_argument("--alpha", type=_alpha, default=2.0, help="linguistic hedge exponent (> 1)")
    p.add_argument("--seed", type=_seed, default=42, help="random seed, or 'random' for system entropy")
    p.add_argument("--bounds", choices=("image", "full"), default="image",
                   help="search box: gray levels present in the image, or the full [0, 255] range")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="fuzzseg", formatter_class=fmt,
                     description="Multi-level gray-image thresholding by Type-II fuzzy entropy.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("segment", formatter_class=fmt, help="threshold one image",
                       description="Optimize thresholds for one image and write the segmented result.")
    p.add_argument("--input", required=True, help="PGM or PNG image")
    p.add_argument("--thresholds", type=_positive_int, default=2, help="number of thresholds LV")
    p.add_argument("--algorithm", choices=ALGORITHMS, default="appa", help="optimizer")
    _add_search_options(p)
    p.add_argument("--format", choices=("png", "pgm"), default="png", help="segmented image format")
    p.add_argument("--output", default=".", help="output directory")

    p = sub.add_parser("benchmark", formatter_class=fmt, help="compare optimizers over several runs",
                       description="Run every image x threshold count x algorithm cell and write reports.")
    p.add_argument("--input", required=True, nargs="+", help="PGM or PNG images")
    p.add_argument("--thresholds", type=_positive_int, nargs="+", default=[2], help="threshold counts LV")
    p.add_argument("--algorithm", choices=ALGORITHMS, nargs="+", default=list(ALGORITHMS), help="optimizers")
    p.add_argument("--runs", type=_positive_int, default=10, help="runs per cell")
    _add_search_options(p)
    p.add_argument("--output", default="results", help="output directory")

    p = sub.add_parser("histogram", formatter_class=fmt, help="export a normalized histogram",
                       description="Write the level,frequency CSV of an image's normalized histogram.")
    p.add_argument("--input", required=True, help="PGM or PNG image")
    p.add_argument("--output", default=".", help="output directory")
    return parser


def _config(args) -> ExperimentConfig:
    return ExperimentConfig(
        generations=args.generations,
        population=args.population,
        max_runners=args.n_max,
        alpha=args.alpha,
        bounds=args.bounds,
    )


class _Outputs:
    """Tracks files written by a command so a failure can remove them."""

    def __init__(self):
        self.paths: list[Path] = []

    def add(self, *paths):
        self.paths.extend(Path(p) for p in paths)

    def discard(self):
        for p in reversed(self.paths):
            if p.is_file():
                p.unlink()
            elif p.is_dir() and not any(p.iterdir()):
                p.rmdir()


def _prepare_dir(path, outputs: _Outputs) -> Path:
    path = Path(path)
    missing = []
    for parent in [path, *path.parents]:
        if parent.exists():
            break
        missing.append(parent)
    path.mkdir(parents=True, exist_ok=True)
    outputs.add(*missing)
    return path


def cmd_segment(args, outputs: _Outputs) -> int:
    img = load_gray_image(args.input)
    hist = compute_histogram(img)
    seed = _resolve_seed(args.seed)
    config = _config(args)
    stem = Path(args.input).stem
    rec = run_cell(stem, hist, args.thresholds, args.algorithm, seed, config)

    out = _prepare_dir(args.output, outputs)
    seg_path = out / f"{stem}_segmented.{args.format}"
    json_path = out / f"{stem}_segment.json"
    conv_path = out / f"{stem}_convergence.csv"
    outputs.add(seg_path, json_path, conv_path)
    save_gray_image(render_segmented(img, rec.thresholds), seg_path)
    sidecar = {
        "image": str(args.input),
        "algorithm": rec.algorithm,
        "lv": rec.lv,
        "thresholds": rec.thresholds.tolist(),
        "fuzzy_params": rec.best_params.tolist(),
        "fitness": rec.best_fitness,
        "seed": seed,
        "alpha": args.alpha,
        "generations": args.generations,
        "bounds": args.bounds,
    }
    json_path.write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8", newline="\n")
    lines = ["generation,best_fitness"] + [f"{g + 1},{v!r}" for g, v in enumerate(rec.trace)]
    conv_path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    print(f"thresholds {' '.join(map(str, rec.thresholds))} fitness {rec.best_fitness:.6f} -> {seg_path}")
    return EXIT_OK


def cmd_benchmark(args, outputs: _Outputs) -> int:
    seed = _resolve_seed(args.seed)
    result = run_experiment(args.input, args.thresholds, args.algorithm, args.runs, seed, _config(args))
    for image_id, message in sorted(result.failures.items()):
        print(f"fuzzseg: {message}", file=sys.stderr)
    if not result.records:
        return EXIT_IO
    out = _prepare_dir(args.output, outputs)
    outputs.add(out / "convergence")
    written = emit_reports(result, out)
    outputs.add(*written)
    print(f"{len(result.records)} runs over {len(result.summary)} cells -> {out}")
    return EXIT_IO if result.failures else EXIT_OK


def cmd_histogram(args, outputs: _Outputs) -> int:
    hist = compute_histogram(load_gray_image(args.input))
    out = _prepare_dir(args.output, outputs)
    path = out / f"{Path(args.input).stem}_histogram.csv"
    outputs.add(path)
    write_histogram_csv(hist, path)
    print(path)
    return EXIT_OK


COMMANDS = {"segment": cmd_segment, "benchmark": cmd_benchmark, "histogram": cmd_histogram}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    outputs = _Outputs()
    try:
        status = COMMANDS[args.command](args, outputs)
    except (OSError, ImageFormatError) as exc:
        outputs.discard()
        print(f"fuzzseg: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        outputs.discard()
        print(f"fuzzseg: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        outputs.discard()
        print(f"fuzzseg: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return status


if __name__ == "__main__":
    raise SystemExit(main())

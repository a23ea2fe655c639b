"""Deterministic synthetic test images standing in for natural photographs.

Each image is a handful of smooth regions (horizontal bands warped by a
sine, plus a disk) whose intensities are drawn from distinct Gaussian modes,
so the histogram is multi-modal with overlapping tails.
"""
from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from .imageio import GrayImage, save_gray_image

__all__ = ["CORPUS", "bimodal_image", "corpus", "make_image", "write_corpus"]

# id -> (mode means, mode spreads, seed)
CORPUS = {
    "synth-bands3": ((40, 120, 205), (12, 18, 14), 11),
    "synth-bands4": ((25, 85, 150, 220), (10, 14, 16, 9), 12),
    "synth-bands5": ((20, 70, 110, 165, 225), (8, 12, 10, 14, 8), 13),
    "synth-skewed": ((15, 60, 200), (6, 30, 25), 14),
}


def make_image(means, spreads, seed: int, size: int = 96) -> GrayImage:
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size]
    warp = 6.0 * np.sin(2 * np.pi * x / size * rng.uniform(0.5, 2.0))
    n = len(means)
    band = np.clip(((y + warp) / size * (n - 1)).astype(int), 0, n - 2)
    cy, cx, rad = rng.uniform(0.3, 0.7) * size, rng.uniform(0.3, 0.7) * size, size / 5
    band[(y - cy) ** 2 + (x - cx) ** 2 < rad ** 2] = n - 1
    mu = np.asarray(means, dtype=float)[band]
    sd = np.asarray(spreads, dtype=float)[band]
    gradient = 8.0 * (x / size - 0.5)
    px = np.rint(mu + gradient + sd * rng.standard_normal((size, size)))
    return GrayImage(np.clip(px, 0, 255).astype(np.int64))


def bimodal_image(low: float, high: float, spread: float, seed: int = 0, size: int = 64) -> GrayImage:
    """Left half drawn around ``low``, right half around ``high``."""
    rng = np.random.default_rng(seed)
    mu = np.where(np.arange(size)[None, :] < size // 2, low, high) * np.ones((size, 1))
    px = np.rint(mu + spread * rng.standard_normal((size, size)))
    return GrayImage(np.clip(px, 0, 255).astype(np.int64))


def corpus() -> dict[str, GrayImage]:
    return {name: make_image(*entry) for name, entry in CORPUS.items()}


def write_corpus(out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, img in corpus().items():
        path = out_dir / f"{name}.pgm"
        save_gray_image(img, path)
        paths.append(path)
    return paths


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Write the synthetic test corpus as PGM files.")
    parser.add_argument("out_dir", help="directory to write into")
    args = parser.parse_args(argv)
    for path in write_corpus(args.out_dir):
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

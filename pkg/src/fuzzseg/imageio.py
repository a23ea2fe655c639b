"""Grayscale image loading, histograms and segmented-image output.

PGM (P2/P5) is parsed here so header errors can point at a byte offset; PNG
goes through Pillow.  Color PNGs are reduced to luma with BT.601 weights,
rounded half up in integer arithmetic.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

__all__ = [
    "CorruptHeaderError",
    "GrayImage",
    "Histogram",
    "ImageFormatError",
    "UnsupportedFormatError",
    "compute_histogram",
    "decode_pgm",
    "encode_pgm",
    "load_gray_image",
    "luma",
    "render_segmented",
    "save_gray_image",
    "write_histogram_csv",
]

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


class ImageFormatError(ValueError):
    def __init__(self, message: str, path=None, offset: int | None = None):
        self.path = None if path is None else str(path)
        self.offset = offset
        where = ""
        if self.path is not None:
            where += f"{self.path}: "
        if offset is not None:
            where += f"byte {offset}: "
        super().__init__(where + message)


class UnsupportedFormatError(ImageFormatError):
    pass


class CorruptHeaderError(ImageFormatError):
    pass


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Row-major ``height x width`` array of gray values in ``[0, levels-1]``."""

    pixels: np.ndarray
    levels: int = 256

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.int64)
        if px.ndim != 2 or px.size == 0:
            raise ValueError(f"expected a non-empty 2-D pixel array, got shape {px.shape}")
        if self.levels < 2:
            raise ValueError("levels must be >= 2")
        if px.min() < 0 or px.max() > self.levels - 1:
            raise ValueError(f"pixel values must lie in [0, {self.levels - 1}]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_flat(cls, width: int, height: int, values: Iterable[int], levels: int = 256) -> "GrayImage":
        arr = np.asarray(list(values), dtype=np.int64)
        if arr.size != width * height:
            raise ValueError(f"{arr.size} pixels given for a {width}x{height} image")
        return cls(arr.reshape(height, width), levels)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def flat(self) -> list[int]:
        return self.pixels.ravel().tolist()

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.levels == other.levels and np.array_equal(self.pixels, other.pixels)

    def __repr__(self):
        return f"GrayImage(width={self.width}, height={self.height}, levels={self.levels})"


@dataclass(frozen=True, eq=False)
class Histogram:
    bins: np.ndarray
    pixel_count: int

    def __post_init__(self):
        bins = np.array(self.bins, dtype=float).ravel()
        if bins.size < 2:
            raise ValueError("a histogram needs at least two bins")
        if np.any(bins < 0):
            raise ValueError("histogram bins must be non-negative")
        if abs(bins.sum() - 1.0) > 1e-9:
            raise ValueError(f"histogram bins sum to {bins.sum()!r}, not 1")
        bins.setflags(write=False)
        object.__setattr__(self, "bins", bins)

    @classmethod
    def from_counts(cls, counts) -> "Histogram":
        counts = np.asarray(counts, dtype=float)
        total = counts.sum()
        if total <= 0:
            raise ValueError("histogram counts are all zero")
        return cls(counts / total, int(round(total)))

    @property
    def levels(self) -> int:
        return self.bins.size

    def nonzero_range(self) -> tuple[int, int]:
        """Lowest and highest gray level with non-zero frequency."""
        nz = np.flatnonzero(self.bins)
        return int(nz[0]), int(nz[-1])


def compute_histogram(img: GrayImage) -> Histogram:
    counts = np.bincount(img.pixels.ravel(), minlength=img.levels)
    return Histogram(counts / img.pixels.size, int(img.pixels.size))


def luma(rgb: np.ndarray) -> np.ndarray:
    """BT.601 luma of an ``(..., 3)`` uint8 array, rounded half up."""
    rgb = np.asarray(rgb, dtype=np.int64)
    y = (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000
    return np.clip(y, 0, 255)


# --- PGM -------------------------------------------------------------------

_WHITESPACE = b" \t\r\n\v\f"


def _pgm_tokens(data: bytes, count: int, start: int, path):
    """Read ``count`` header integers; return them and the offset after the last."""
    pos = start
    out = []
    while len(out) < count:
        while pos < len(data) and (data[pos] in _WHITESPACE or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                nl = data.find(b"\n", pos)
                pos = len(data) if nl < 0 else nl + 1
            else:
                pos += 1
        if pos >= len(data):
            raise CorruptHeaderError("header ended early", path, pos)
        begin = pos
        while pos < len(data) and data[pos] not in _WHITESPACE and data[pos] != ord("#"):
            pos += 1
        token = data[begin:pos]
        if not token.isdigit():
            raise CorruptHeaderError(f"expected an integer, found {token[:16]!r}", path, begin)
        out.append((int(token), begin))
    return out, pos


def decode_pgm(data: bytes, path=None) -> GrayImage:
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise UnsupportedFormatError(f"not a P2/P5 PGM (magic {magic!r})", path, 0)
    tokens, pos = _pgm_tokens(data, 3, 2, path)
    (w, w_at), (h, h_at), (maxval, m_at) = tokens
    if w <= 0:
        raise CorruptHeaderError("width must be positive", path, w_at)
    if h <= 0:
        raise CorruptHeaderError("height must be positive", path, h_at)
    if not 0 < maxval <= 255:
        if maxval > 255:
            raise UnsupportedFormatError(f"maxval {maxval} > 255 (16-bit PGM)", path, m_at)
        raise CorruptHeaderError("maxval must be positive", path, m_at)
    n = w * h
    if magic == b"P5":
        if pos >= len(data) or data[pos] not in _WHITESPACE:
            raise CorruptHeaderError("missing whitespace before raster", path, pos)
        raster = data[pos + 1: pos + 1 + n]
        if len(raster) < n:
            raise CorruptHeaderError(f"raster truncated: {len(raster)} of {n} bytes", path, pos + 1)
        px = np.frombuffer(raster, dtype=np.uint8).astype(np.int64)
    else:
        body = data[pos:].split()
        if len(body) < n:
            raise CorruptHeaderError(f"raster truncated: {len(body)} of {n} values", path, pos)
        try:
            px = np.array([int(t) for t in body[:n]], dtype=np.int64)
        except ValueError:
            raise CorruptHeaderError("non-integer sample in ASCII raster", path, pos) from None
    if px.max() > maxval:
        raise CorruptHeaderError(f"sample {int(px.max())} exceeds maxval {maxval}", path, pos)
    return GrayImage(px.reshape(h, w), 256)


def encode_pgm(img: GrayImage) -> bytes:
    if img.levels > 256:
        raise ValueError("PGM output supports at most 256 levels")
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.astype(np.uint8).tobytes()


# --- PNG -------------------------------------------------------------------

def _decode_png(data: bytes, path=None) -> GrayImage:
    from PIL import Image, UnidentifiedImageError

    try:
        im = Image.open(io.BytesIO(data))
        im.load()
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise CorruptHeaderError(f"PNG decode failed: {exc}", path, 8) from None
    mode = im.mode
    if mode == "P":
        im = im.convert("RGBA" if "transparency" in im.info else "RGB")
        mode = im.mode
    if mode in ("L", "LA"):
        px = np.asarray(im)[..., 0] if mode == "LA" else np.asarray(im)
    elif mode in ("RGB", "RGBA"):
        px = luma(np.asarray(im)[..., :3])
    elif mode == "1":
        px = np.asarray(im.convert("L"))
    else:
        raise UnsupportedFormatError(f"PNG mode {mode!r} is not 8-bit gray or RGB", path)
    return GrayImage(np.asarray(px, dtype=np.int64), 256)


def _encode_png(img: GrayImage) -> bytes:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(img.pixels.astype(np.uint8), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def load_gray_image(path) -> GrayImage:
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise FileNotFoundError(f"{path}: no such file") from None
    if data.startswith(PNG_SIGNATURE):
        return _decode_png(data, path)
    if data[:2] in (b"P2", b"P5"):
        return decode_pgm(data, path)
    raise UnsupportedFormatError("not a PGM or PNG file", path, 0)


def save_gray_image(img: GrayImage, path) -> None:
    """Write PNG when the suffix is ``.png``, binary PGM otherwise."""
    path = Path(path)
    payload = _encode_png(img) if path.suffix.lower() == ".png" else encode_pgm(img)
    path.write_bytes(payload)


def render_segmented(img: GrayImage, thresholds) -> GrayImage:
    """Map each pixel to an evenly spaced representative of its region.

    Region ``j`` holds ``T_j < p <= T_{j+1}`` (with ``T_0 = -1``) and is drawn
    at ``round(j * (L-1) / LV)``.
    """
    t = [int(x) for x in thresholds]
    if not t:
        raise ValueError("no thresholds given")
    if any(b <= a for a, b in zip(t, t[1:])):
        raise ValueError(f"thresholds must be strictly increasing, got {t}")
    if t[0] < 0 or t[-1] > img.levels - 1:
        raise ValueError(f"thresholds must lie in [0, {img.levels - 1}]")
    lv = len(t)
    top = img.levels - 1
    reps = np.array([(2 * j * top + lv) // (2 * lv) for j in range(lv + 1)], dtype=np.int64)
    region = np.searchsorted(np.asarray(t), img.pixels, side="left")
    return GrayImage(reps[region], img.levels)


def write_histogram_csv(hist: Histogram, path) -> None:
    lines = ["level,frequency"]
    lines += [f"{k},{float(hist.bins[k])!r}" for k in np.flatnonzero(hist.bins)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")

"""Sensory frame descriptors and raw frame-difference operators.

A traverse is represented as a list of Descriptor objects, either dense
(patch-normalized pixels, precomputed feature vectors) or sparse
(Wi-Fi RSSI readings keyed by access-point id, absent entries are zero).
This module also owns the raw ingestion paths: binary PGM images and
Wi-Fi observation records.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np


class FormatError(ValueError):
    """Raised when an input file or record stream is malformed."""


@dataclass
class Descriptor:
    """One frame's sensory vector.

    ``values`` is a float64 array for dense descriptors, or a dict mapping
    feature id to value for sparse ones (absent ids read as 0).
    """

    values: np.ndarray | dict[int, float]
    dim: int
    kind: str  # "dense" | "sparse"

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError(f"descriptor dim must be positive, got {self.dim}")
        if self.kind == "dense":
            self.values = np.asarray(self.values, dtype=np.float64)
            if self.values.ndim != 1 or self.values.shape[0] != self.dim:
                raise ValueError(
                    f"dense descriptor has {self.values.size} values, expected {self.dim}"
                )
            if not np.all(np.isfinite(self.values)):
                raise ValueError("descriptor values must be finite")
        elif self.kind == "sparse":
            if not isinstance(self.values, dict):
                raise ValueError("sparse descriptor requires a dict of {feature_id: value}")
            for k, v in self.values.items():
                if not 0 <= k < self.dim:
                    raise ValueError(f"feature id {k} out of range for dim {self.dim}")
                if not math.isfinite(v):
                    raise ValueError("descriptor values must be finite")
        else:
            raise ValueError(f"unknown descriptor kind {self.kind!r}")

    @classmethod
    def dense(cls, values) -> "Descriptor":
        values = np.asarray(values, dtype=np.float64)
        return cls(values=values, dim=int(values.shape[0]), kind="dense")

    @classmethod
    def sparse(cls, entries: dict[int, float], dim: int) -> "Descriptor":
        return cls(values=dict(entries), dim=dim, kind="sparse")

    def as_dense(self) -> np.ndarray:
        """Materialize to a float64 vector (zeros for absent sparse entries)."""
        if self.kind == "dense":
            return self.values
        out = np.zeros(self.dim, dtype=np.float64)
        for k, v in self.values.items():
            out[k] = v
        return out


@dataclass
class GrayImage:
    """Grayscale image with row-major float intensities in [0, 255]."""

    width: int
    height: int
    pixels: np.ndarray = field(repr=False)  # shape (height, width)

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.shape != (self.height, self.width):
            self.pixels = self.pixels.reshape(self.height, self.width)
        if not np.all(np.isfinite(self.pixels)):
            raise ValueError("image intensities must be finite")


@dataclass(frozen=True)
class WifiRecord:
    """One access-point observation at a given frame."""

    frame_index: int
    ap_id: int
    rssi: float


# --------------------------------------------------------------------------
# PGM ingestion

def _read_pgm_tokens(data: bytes, n_tokens: int) -> tuple[list[int], int]:
    """Read up to n_tokens whitespace-separated header integers, skipping
    '#' comments. Returns (tokens, offset just past the final separator)."""
    tokens: list[int] = []
    i = 0
    while len(tokens) < n_tokens:
        if i >= len(data):
            raise FormatError("PGM header truncated")
        c = data[i : i + 1]
        if c in b" \t\r\n":
            i += 1
        elif c == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
        else:
            j = i
            while j < len(data) and data[j : j + 1] not in b" \t\r\n#":
                j += 1
            tok = data[i:j]
            if not tok.isdigit():
                raise FormatError(f"malformed PGM header token {tok!r}")
            tokens.append(int(tok))
            i = j
    # exactly one whitespace byte separates the header from the raster
    if i >= len(data) or data[i : i + 1] not in b" \t\r\n":
        raise FormatError("PGM header not terminated by whitespace")
    return tokens, i + 1


def load_pgm(path) -> GrayImage:
    """Load a binary (P5) PGM file, rescaling intensities to [0, 255].

    Supports 8-bit and big-endian 16-bit rasters (maxval up to 65535).
    ASCII (P2) files are rejected as unsupported.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 2:
        raise FormatError(f"{path}: not a PGM file (empty or too short)")
    magic = data[:2]
    if magic == b"P2":
        raise FormatError(f"{path}: ASCII PGM (P2) is not supported, use binary P5")
    if magic != b"P5":
        raise FormatError(f"{path}: unsupported magic {magic!r}, expected P5")
    (width, height, maxval), offset = _read_pgm_tokens(data[2:], 3)
    offset += 2
    if width <= 0 or height <= 0:
        raise FormatError(f"{path}: invalid dimensions {width}x{height}")
    if not 0 < maxval <= 65535:
        raise FormatError(f"{path}: unsupported maxval {maxval}")
    n = width * height
    if maxval < 256:
        raw = data[offset : offset + n]
        if len(raw) < n:
            raise FormatError(f"{path}: truncated pixel data ({len(raw)} of {n} bytes)")
        pixels = np.frombuffer(raw, dtype=np.uint8).astype(np.float64)
    else:
        raw = data[offset : offset + 2 * n]
        if len(raw) < 2 * n:
            raise FormatError(f"{path}: truncated pixel data ({len(raw)} of {2 * n} bytes)")
        pixels = np.frombuffer(raw, dtype=">u2").astype(np.float64)
    pixels = pixels * (255.0 / maxval)
    return GrayImage(width=width, height=height, pixels=pixels.reshape(height, width))


# --------------------------------------------------------------------------
# Image preprocessing

def downsample(img: GrayImage, out_w: int, out_h: int) -> GrayImage:
    """Area-average pooling to ``out_w`` x ``out_h``.

    Each output pixel is the mean of its source rectangle; rectangle edges
    come from the equal real-valued subdivision floor(k * size / out).
    """
    if out_w < 1 or out_h < 1:
        raise ValueError("output dimensions must be >= 1")
    if out_w > img.width or out_h > img.height:
        raise ValueError(
            f"cannot downsample {img.width}x{img.height} to {out_w}x{out_h}"
        )
    x_edges = [(k * img.width) // out_w for k in range(out_w + 1)]
    y_edges = [(k * img.height) // out_h for k in range(out_h + 1)]
    out = np.empty((out_h, out_w), dtype=np.float64)
    for r in range(out_h):
        for c in range(out_w):
            block = img.pixels[y_edges[r] : y_edges[r + 1], x_edges[c] : x_edges[c + 1]]
            out[r, c] = block.mean()
    return GrayImage(width=out_w, height=out_h, pixels=out)


def patch_normalize(img: GrayImage, patch: int = 4) -> Descriptor:
    """Standardize each non-overlapping patch x patch block to zero mean and
    unit population standard deviation, then flatten row-major.

    Constant patches (sigma = 0) become all zeros. Dimensions must divide
    evenly by ``patch``; there is no silent padding.
    """
    if patch < 1:
        raise ValueError("patch size must be >= 1")
    if img.width % patch or img.height % patch:
        raise ValueError(
            f"image {img.width}x{img.height} not divisible by patch size {patch}"
        )
    bh, bw = img.height // patch, img.width // patch
    blocks = img.pixels.reshape(bh, patch, bw, patch)
    mean = blocks.mean(axis=(1, 3), keepdims=True)
    sigma = blocks.std(axis=(1, 3), keepdims=True)  # population std
    centered = blocks - mean
    normed = np.where(sigma > 0.0, centered / np.where(sigma > 0.0, sigma, 1.0), 0.0)
    flat = normed.reshape(img.height, img.width).reshape(-1)
    return Descriptor.dense(flat)


# --------------------------------------------------------------------------
# Wi-Fi ingestion

def wifi_vectorize(records, frame_index: int, ap_count: int) -> Descriptor:
    """Build the sparse RSSI vector for one frame.

    Duplicate (frame, ap) observations keep the maximum RSSI and emit a
    warning. Unobserved access points are absent (zero in differences).
    """
    if ap_count < 1:
        raise ValueError("ap_count must be >= 1")
    entries: dict[int, float] = {}
    dup = False
    for rec in records:
        if rec.frame_index != frame_index:
            continue
        if rec.ap_id >= ap_count:
            raise ValueError(
                f"ap_id {rec.ap_id} out of range for ap_count {ap_count}"
            )
        if rec.ap_id in entries:
            dup = True
            entries[rec.ap_id] = max(entries[rec.ap_id], rec.rssi)
        else:
            entries[rec.ap_id] = float(rec.rssi)
    if dup:
        warnings.warn(
            f"duplicate (frame, ap) records at frame {frame_index}; kept maximum rssi",
            stacklevel=2,
        )
    return Descriptor.sparse(entries, ap_count)


# --------------------------------------------------------------------------
# Raw difference operators

DIFFERENCE_OPS = ("sad", "cosine")


def raw_difference(a: Descriptor, b: Descriptor, op: str = "sad") -> float:
    """Raw dissimilarity between two frames.

    sad:    sum of absolute differences over the union of support.
    cosine: 1 - cos(a, b) in [0, 2]; a zero vector yields 1.0 with a warning.
    """
    if a.dim != b.dim:
        raise ValueError(f"descriptor dims differ: {a.dim} vs {b.dim}")
    if op == "sad":
        if a.kind == "sparse" and b.kind == "sparse":
            keys = sorted(set(a.values) | set(b.values))
            return float(
                sum(abs(a.values.get(k, 0.0) - b.values.get(k, 0.0)) for k in keys)
            )
        av, bv = a.as_dense(), b.as_dense()
        return float(np.sum(np.abs(av - bv)))
    if op == "cosine":
        av, bv = a.as_dense(), b.as_dense()
        na = float(np.sqrt(np.sum(av * av)))
        nb = float(np.sqrt(np.sum(bv * bv)))
        if na == 0.0 or nb == 0.0:
            warnings.warn("cosine difference with a zero vector, returning 1.0", stacklevel=2)
            return 1.0
        return float(1.0 - np.sum(av * bv) / (na * nb))
    raise ValueError(f"unknown difference operator {op!r}")


def stack_descriptors(descriptors) -> np.ndarray:
    """Stack a traverse into an (n, dim) float64 matrix, densifying sparse
    descriptors. All dims must agree."""
    descriptors = list(descriptors)
    if not descriptors:
        raise ValueError("empty descriptor sequence")
    dim = descriptors[0].dim
    for d in descriptors:
        if d.dim != dim:
            raise ValueError(f"descriptor dims differ: {d.dim} vs {dim}")
    out = np.empty((len(descriptors), dim), dtype=np.float64)
    for i, d in enumerate(descriptors):
        out[i] = d.as_dense()
    return out

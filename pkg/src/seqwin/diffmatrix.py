"""Per-query-normalized difference matrix between query and reference traverses.

Each row i holds the raw differences between query frame i and every
reference frame, standardized by that row's own population mean and
standard deviation. Rows whose raw differences are all (numerically)
equal carry no ranking information and are stored as zeros.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .descriptors import Descriptor, stack_descriptors
from . import fileio

# Relative threshold below which a row's raw standard deviation is treated
# as zero (all raw differences equal up to rounding).
DEGENERATE_SIGMA_RTOL = 1e-12


@dataclass
class DifferenceMatrix:
    """Normalized differences d (n_query x n_ref) plus per-row raw stats."""

    d: np.ndarray  # float64, shape (n_query, n_ref)
    row_mu: np.ndarray  # float64, shape (n_query,)
    row_sigma: np.ndarray  # float64, shape (n_query,)
    op: str = "sad"

    @property
    def n_query(self) -> int:
        return self.d.shape[0]

    @property
    def n_ref(self) -> int:
        return self.d.shape[1]


def _raw_row(qvec: np.ndarray, ref_stack: np.ndarray, op: str) -> np.ndarray:
    """Raw differences between one query vector and the stacked references.

    Reductions use a fixed numpy path so results do not depend on how rows
    are scheduled across threads.
    """
    if op == "sad":
        return np.sum(np.abs(ref_stack - qvec[None, :]), axis=1)
    if op == "cosine":
        qn = float(np.sqrt(np.sum(qvec * qvec)))
        ref_norms = np.sqrt(np.sum(ref_stack * ref_stack, axis=1))
        dots = np.sum(ref_stack * qvec[None, :], axis=1)
        if qn == 0.0 or np.any(ref_norms == 0.0):
            warnings.warn("cosine difference with a zero vector, using 1.0", stacklevel=2)
        out = np.ones(ref_stack.shape[0], dtype=np.float64)
        if qn > 0.0:
            ok = ref_norms > 0.0
            out[ok] = 1.0 - dots[ok] / (ref_norms[ok] * qn)
        return out
    raise ValueError(f"unknown difference operator {op!r}")


def _normalize_row(raw: np.ndarray) -> tuple[np.ndarray, float, float]:
    mu = float(raw.mean())
    sigma = float(raw.std())  # population
    if sigma <= DEGENERATE_SIGMA_RTOL * max(1.0, abs(mu)):
        return np.zeros_like(raw), mu, sigma
    return (raw - mu) / sigma, mu, sigma


def build_row(q: Descriptor, refs, op: str = "sad") -> tuple[np.ndarray, float, float]:
    """Compute one normalized row: (row, mu, sigma) for query ``q``.

    sigma is the population standard deviation of the raw differences; a
    degenerate row (sigma ~ 0) comes back as all zeros.
    """
    refs = list(refs)
    if not refs:
        raise ValueError("reference traverse must be non-empty")
    ref_stack = stack_descriptors(refs)
    if q.dim != ref_stack.shape[1]:
        raise ValueError(f"query dim {q.dim} does not match reference dim {ref_stack.shape[1]}")
    raw = _raw_row(q.as_dense(), ref_stack, op)
    return _normalize_row(raw)


def build(queries, refs, op: str = "sad", threads: int = 1) -> DifferenceMatrix:
    """Build the full difference matrix.

    ``threads`` parallelizes across query rows only; each row is reduced by
    the same fixed-order numpy kernel, so output is identical for any
    thread count.
    """
    queries = list(queries)
    refs = list(refs)
    if not queries or not refs:
        raise ValueError("query and reference traverses must be non-empty")
    q_stack = stack_descriptors(queries)
    ref_stack = stack_descriptors(refs)
    if q_stack.shape[1] != ref_stack.shape[1]:
        raise ValueError(
            f"query dim {q_stack.shape[1]} does not match reference dim {ref_stack.shape[1]}"
        )
    n_q, n_ref = len(queries), len(refs)
    d = np.empty((n_q, n_ref), dtype=np.float64)
    row_mu = np.empty(n_q, dtype=np.float64)
    row_sigma = np.empty(n_q, dtype=np.float64)

    def _fill(i: int) -> None:
        raw = _raw_row(q_stack[i], ref_stack, op)
        d[i], row_mu[i], row_sigma[i] = _normalize_row(raw)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(_fill, range(n_q)))
    else:
        for i in range(n_q):
            _fill(i)
    return DifferenceMatrix(d=d, row_mu=row_mu, row_sigma=row_sigma, op=op)


def append_row(m: DifferenceMatrix, q: Descriptor, refs, op: str | None = None) -> DifferenceMatrix:
    """Return a new matrix with one more query row (streaming ingestion).

    ``refs`` must be the same reference traverse used at build time.
    """
    op = m.op if op is None else op
    if op != m.op:
        raise ValueError(f"operator mismatch: matrix built with {m.op!r}, got {op!r}")
    row, mu, sigma = build_row(q, refs, op)
    if row.shape[0] != m.n_ref:
        raise ValueError(f"reference count changed: {m.n_ref} vs {row.shape[0]}")
    return DifferenceMatrix(
        d=np.vstack([m.d, row[None, :]]),
        row_mu=np.append(m.row_mu, mu),
        row_sigma=np.append(m.row_sigma, sigma),
        op=m.op,
    )


# --------------------------------------------------------------------------
# Cache dump/load (manifest + float32 blob envelope)

def dump(m: DifferenceMatrix, path) -> Path:
    stem = fileio._stem(path)
    manifest = {
        "count": m.n_query,
        "dim": m.n_ref,
        "dtype": "f32",
        "layout": "row-major",
        "kind": "difference-matrix",
        "op": m.op,
        "row_mu": [float(v) for v in m.row_mu],
        "row_sigma": [float(v) for v in m.row_sigma],
    }
    fileio._write_envelope(stem, manifest, m.d)
    return stem


def load(path) -> DifferenceMatrix:
    manifest, values = fileio._read_envelope(fileio._stem(path))
    if manifest.get("kind") != "difference-matrix":
        raise fileio.FormatError(f"{path}: not a difference-matrix dump")
    return DifferenceMatrix(
        d=values.astype(np.float64),
        row_mu=np.array(manifest["row_mu"], dtype=np.float64),
        row_sigma=np.array(manifest["row_sigma"], dtype=np.float64),
        op=manifest.get("op", "sad"),
    )

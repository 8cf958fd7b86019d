"""Per-frame adaptive selection of the matching window length.

For every query frame the window length grid is scanned, the significance
p(L) of the best hypothesis at each feasible L is computed, and the L with
minimal p wins (ties prefer the shorter window). The score emitted for
downstream thresholding in adaptive mode is the significance p, which is
comparable across frames that used different window lengths.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diffmatrix import DifferenceMatrix
from .distributions import METHODS, significance
from .windows import (
    HYPOTHESIS,
    LocalizationResult,
    PrefixField,
    build_prefix,
    score_row,
    window_score,
)


@dataclass
class AdaptiveConfig:
    """Window search configuration. Defaults cover 10 <= L <= 500."""

    l_min: int = 10
    l_max: int = 500
    l_stride: int = 5
    method: str = "gaussian"
    op: str = "sad"
    exclude_min: bool = False

    def __post_init__(self):
        if not 1 <= self.l_min <= self.l_max:
            raise ValueError(f"need 1 <= l_min <= l_max, got [{self.l_min}, {self.l_max}]")
        if self.l_stride < 1:
            raise ValueError(f"l_stride must be >= 1, got {self.l_stride}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {METHODS}")

    def grid(self) -> list[int]:
        """Sampled window lengths; both endpoints always included."""
        values = list(range(self.l_min, self.l_max + 1, self.l_stride))
        if values[-1] != self.l_max:
            values.append(self.l_max)
        return values


@dataclass
class AdaptiveTrace:
    """Adaptive run output: one result per query frame, in frame order.

    ``curves`` (when collected) holds the full p(L) profile per frame as a
    list of (L, p) pairs, empty for frames without a hypothesis.
    """

    results: list[LocalizationResult]
    curves: list[list[tuple[int, float]]] | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.results)

    def chosen_lengths(self) -> np.ndarray:
        """Window lengths of frames that produced a hypothesis."""
        return np.array(
            [r.window_len for r in self.results if r.status == HYPOTHESIS], dtype=np.int64
        )


def p_of_L(
    prefix: PrefixField, i: int, L: int, method: str, exclude_min: bool = False
) -> tuple[float, int]:
    """Significance of the best hypothesis at window length L for frame i.

    Returns (p, best reference index j*). A single-candidate row is
    degenerate and yields p = 1.0.
    """
    scores = score_row(prefix, i, L)  # validates i, L
    if scores.size == 1:
        return 1.0, L - 1
    p, idx = significance(scores, method, exclude_min=exclude_min)
    return p, L - 1 + idx


def feasible_grid(cfg: AdaptiveConfig, i: int, n_ref: int) -> list[int]:
    """Grid lengths usable at frame i: L <= min(l_max, i + 1, n_ref)."""
    cap = min(cfg.l_max, i + 1, n_ref)
    return [L for L in cfg.grid() if L <= cap]


def adapt_frame(
    prefix: PrefixField,
    i: int,
    cfg: AdaptiveConfig,
    collect_curve: bool = False,
) -> LocalizationResult | tuple[LocalizationResult, list[tuple[int, float]]]:
    """Pick L_i = argmin_L p_i(L) over the feasible grid for frame i.

    Ties prefer the smaller L. Frames with less history than l_min emit
    no_hypothesis. Total over all frame indices; never raises for short
    history.
    """
    grid = feasible_grid(cfg, i, prefix.n_ref)
    curve: list[tuple[int, float]] = []
    if not grid:
        result = LocalizationResult.none(i)
        return (result, curve) if collect_curve else result
    best_p = np.inf
    best_L = grid[0]
    best_j = -1
    for L in grid:
        p, j = p_of_L(prefix, i, L, cfg.method, exclude_min=cfg.exclude_min)
        if collect_curve:
            curve.append((L, p))
        if p < best_p:  # strict: ties keep the smaller L
            best_p, best_L, best_j = p, L, j
    s = window_score(prefix, i, best_j, best_L)
    result = LocalizationResult(
        query_index=i,
        best_ref=best_j,
        window_len=best_L,
        score=float(s),
        significance=float(best_p),
        status=HYPOTHESIS,
    )
    return (result, curve) if collect_curve else result


def run_adaptive(
    m: DifferenceMatrix,
    cfg: AdaptiveConfig,
    collect_curves: bool = False,
    prefix: PrefixField | None = None,
) -> AdaptiveTrace:
    """Adaptive localization over every query frame, in order.

    Frame i depends only on rows 0..i of the matrix, so appending rows one
    at a time reproduces the same trace prefix (streaming equivalence).
    """
    if m.d.size == 0:
        raise ValueError("difference matrix is empty")
    if prefix is None:
        prefix = build_prefix(m)
    results: list[LocalizationResult] = []
    curves: list[list[tuple[int, float]]] = []
    for i in range(m.n_query):
        if collect_curves:
            result, curve = adapt_frame(prefix, i, cfg, collect_curve=True)
            curves.append(curve)
        else:
            result = adapt_frame(prefix, i, cfg)
        results.append(result)
    return AdaptiveTrace(results=results, curves=curves if collect_curves else None)

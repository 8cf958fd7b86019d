"""Sequence localization with adaptively sized matching windows.

Workflow: turn per-frame descriptors into a contrast-normalized difference
matrix, score constant-velocity diagonal windows of length L against it,
model the score distribution of each row to get a significance value for
the best match, and pick per frame the window length whose best match is
hardest to explain by chance.
"""

from .adaptive import AdaptiveConfig, AdaptiveTrace, adapt_frame, p_of_L, run_adaptive
from .descriptors import (
    Descriptor,
    FormatError,
    GrayImage,
    WifiRecord,
    downsample,
    load_pgm,
    patch_normalize,
    raw_difference,
    stack_descriptors,
    wifi_vectorize,
)
from .diffmatrix import DifferenceMatrix, build, build_row
from .distributions import (
    DistributionFit,
    METHODS,
    cdf,
    fit,
    fit_gaussian,
    fit_gmm,
    fit_robust_gaussian,
    normal_cdf,
    significance,
    std_normal_cdf,
)
from .evaluation import (
    GroundTruth,
    PRPoint,
    ShuffleSpec,
    SynthSpec,
    auc,
    benchmark_spec,
    correctness,
    mtl,
    pr_curve,
    shuffle_traverse,
    synth_generate,
)
from .windows import (
    HYPOTHESIS,
    NO_HYPOTHESIS,
    LocalizationResult,
    PrefixField,
    build_prefix,
    fixed_localize,
    score_row,
    window_score,
)

__all__ = [
    "AdaptiveConfig",
    "AdaptiveTrace",
    "Descriptor",
    "DifferenceMatrix",
    "DistributionFit",
    "FormatError",
    "GrayImage",
    "GroundTruth",
    "HYPOTHESIS",
    "LocalizationResult",
    "METHODS",
    "NO_HYPOTHESIS",
    "PRPoint",
    "PrefixField",
    "ShuffleSpec",
    "SynthSpec",
    "WifiRecord",
    "adapt_frame",
    "auc",
    "benchmark_spec",
    "build",
    "build_prefix",
    "build_row",
    "cdf",
    "correctness",
    "downsample",
    "fit",
    "fit_gaussian",
    "fit_gmm",
    "fit_robust_gaussian",
    "fixed_localize",
    "load_pgm",
    "mtl",
    "normal_cdf",
    "p_of_L",
    "patch_normalize",
    "pr_curve",
    "raw_difference",
    "run_adaptive",
    "score_row",
    "shuffle_traverse",
    "significance",
    "stack_descriptors",
    "std_normal_cdf",
    "synth_generate",
    "wifi_vectorize",
    "window_score",
]

__version__ = "0.1.0"

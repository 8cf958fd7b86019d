"""Ground truth, latency/accuracy metrics, traverse shuffling, synthetic data.

Two metrics summarize a run: MTL, the longest run of consecutive query
frames without a correct match (frames with no hypothesis count as
incorrect), and the area under the precision-recall curve swept over
acceptance thresholds. The synthetic generator produces seeded
image-like (dense) or Wi-Fi-like (sparse) traverse pairs with optional
speed drift and segment shuffling; all randomness flows through numpy's
PCG64 so datasets are reproducible across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .descriptors import Descriptor
from .windows import HYPOTHESIS, LocalizationResult

# Dense-modality route geometry: the traverse loops a helix in a 3-d
# latent space, so each lap passes within HELIX_LAP_GAP of the previous
# one. Laps alias each other (same heading, similar appearance) and only
# multi-frame windows separate them, while the low-difference trench
# around the true match stays a few frames wide.
HELIX_LAPS = 6.0
HELIX_LAP_GAP = 4.0
# The random Fourier feature map from latent position to descriptor space
# mixes two length scales: local features distinguish nearby frames
# (similarity decays over ~2 latent units = frames) while broad features
# encode slowly changing regional appearance. The broad component keeps
# the window-score distribution structured at every window length instead
# of collapsing to thin noise, which is what real traverses look like.
FEATURE_SCALE_LOCAL = 2.0
FEATURE_SCALE_BROAD = 6.0
FEATURE_BROAD_FRAC = 0.25
# Speed drift varies slowly along the traverse.
DRIFT_RHO = 0.995
# Sensor gain sways slowly with route position (two low-frequency
# harmonics, random phases), like exposure adapting along a drive. Both
# traverses see the same gain, and per-query-row standardization strips
# the query-side factor, so every difference-matrix row inherits the same
# reference-position gain profile. That gives score rows a position-locked
# variance floor at every window length no matter which route chunks the
# window spans. Without the floor, arbitrarily long windows look
# arbitrarily sharp and a stale hypothesis carried across a route
# discontinuity stays confident for hundreds of frames.
GAIN_SWAY = 0.35
GAIN_CYCLES = (0.7, 1.9)
GAIN_WEIGHTS = (0.8, 0.6)
# Wi-Fi modality targets (access-point count and visibility per frame).
WIFI_TARGET_ACTIVE = 12.6
WIFI_RSSI_NEAR = -40.0
WIFI_RSSI_SPAN = 30.0


@dataclass
class GroundTruth:
    """query_index -> true reference index; absent keys have no valid
    correspondence. ``tolerance`` is the correctness radius in frames."""

    mapping: dict[int, int]
    tolerance: int = 5


@dataclass(frozen=True)
class PRPoint:
    threshold: float
    precision: float
    recall: float
    n_accepted: int
    n_correct: int


@dataclass
class ShuffleSpec:
    min_frac: float = 0.02
    max_frac: float = 0.20
    seed: int = 0


@dataclass
class SynthSpec:
    """Synthetic traverse-pair parameters.

    For the wifi modality ``descriptor_dim`` is the access-point count.
    ``speed_drift`` is the relative frame-separation variation of the query
    traverse; ``noise_sigma`` is i.i.d. per-dimension observation noise.
    """

    n_ref: int
    descriptor_dim: int = 128
    modality: str = "dense"  # "dense" | "wifi"
    noise_sigma: float = 2.8
    speed_drift: float = 0.02
    shuffle: ShuffleSpec | None = None
    seed: int = 0


# --------------------------------------------------------------------------
# Correctness and latency

def correctness(result: LocalizationResult, gt: GroundTruth) -> bool:
    """True iff the frame produced a hypothesis within tolerance of truth."""
    if result.status != HYPOTHESIS:
        return False
    true_ref = gt.mapping.get(result.query_index)
    if true_ref is None:
        return False
    return abs(result.best_ref - true_ref) <= gt.tolerance


def mtl(results, gt: GroundTruth) -> int:
    """Maximum time-to-localization: the longest run of incorrect frames."""
    results = list(results)
    if not results:
        raise ValueError("results must be non-empty")
    longest = 0
    run = 0
    for r in results:
        if correctness(r, gt):
            run = 0
        else:
            run += 1
            longest = max(longest, run)
    return longest


# --------------------------------------------------------------------------
# Precision-recall

def pr_curve(results, gt: GroundTruth, mode: str = "threshold_on_score") -> list[PRPoint]:
    """Sweep the acceptance threshold over every observed value.

    A hypothesis is accepted when its value (window score, or significance
    p, depending on ``mode``) is <= the threshold: lower is better for
    both. One point per distinct observed value plus an accept-nothing
    anchor (precision 1.0 by convention). Frames without a hypothesis are
    never accepted but stay in the recall denominator.
    """
    if mode == "threshold_on_score":
        value_of = lambda r: r.score
    elif mode == "threshold_on_significance":
        value_of = lambda r: r.significance
    else:
        raise ValueError(f"unknown PR mode {mode!r}")
    results = list(results)
    n_with_gt = sum(1 for r in results if r.query_index in gt.mapping)
    hyp = [r for r in results if r.status == HYPOTHESIS]
    points = [PRPoint(float("-inf"), 1.0, 0.0, 0, 0)]
    if not hyp:
        return points
    vals = np.array([value_of(r) for r in hyp], dtype=np.float64)
    corr = np.array([correctness(r, gt) for r in hyp], dtype=bool)
    order = np.argsort(vals, kind="stable")
    sv, sc = vals[order], corr[order]
    cum_correct = np.cumsum(sc)
    last_of_value = np.append(np.nonzero(np.diff(sv))[0], sv.size - 1)
    for idx in last_of_value:
        n_acc = int(idx) + 1
        n_cor = int(cum_correct[idx])
        precision = n_cor / n_acc
        recall = n_cor / n_with_gt if n_with_gt > 0 else 0.0
        points.append(PRPoint(float(sv[idx]), precision, recall, n_acc, n_cor))
    return points


def auc(points) -> float:
    """Trapezoidal area under the PR curve.

    Points are sorted by recall keeping the best precision per distinct
    recall; the curve is anchored at recall 0 with the precision of the
    first accepted point (the accept-nothing convention point does not
    contribute area on its own).
    """
    points = list(points)
    if not points:
        raise ValueError("need at least one PR point")
    accepted = [p for p in points if p.n_accepted > 0]
    if not accepted:
        return 0.0
    best: dict[float, float] = {}
    for p in accepted:
        r = float(p.recall)
        if r not in best or p.precision > best[r]:
            best[r] = float(p.precision)
    recalls = sorted(best)
    precisions = [best[r] for r in recalls]
    if recalls[0] > 0.0:
        recalls.insert(0, 0.0)
        precisions.insert(0, precisions[0])
    area = 0.0
    for k in range(1, len(recalls)):
        area += 0.5 * (precisions[k] + precisions[k - 1]) * (recalls[k] - recalls[k - 1])
    return min(max(area, 0.0), 1.0)


# --------------------------------------------------------------------------
# Traverse shuffling

def shuffle_traverse(
    n_query: int, min_frac: float = 0.02, max_frac: float = 0.20, seed: int = 0
) -> np.ndarray:
    """Permutation that rearranges contiguous segments of the traverse.

    Segment lengths are drawn uniformly from [ceil(min_frac * n),
    floor(max_frac * n)] (the final segment may be shorter); segment order
    is then permuted uniformly. Returns perm with new[t] = old[perm[t]].
    """
    if not (0.0 < min_frac <= max_frac < 1.0):
        raise ValueError(f"need 0 < min_frac <= max_frac < 1, got ({min_frac}, {max_frac})")
    # epsilon guards against binary representation fuzz, e.g. 0.02 * 100
    lo = math.ceil(min_frac * n_query - 1e-9)
    hi = math.floor(max_frac * n_query + 1e-9)
    if lo < 1:
        raise ValueError(f"n_query * min_frac must be >= 1, got {n_query} * {min_frac}")
    if hi < lo:
        raise ValueError(f"no admissible segment length for n={n_query}, fracs ({min_frac}, {max_frac})")
    rng = np.random.Generator(np.random.PCG64(seed))
    lengths: list[int] = []
    remaining = n_query
    while remaining > 0:
        length = min(int(rng.integers(lo, hi + 1)), remaining)
        lengths.append(length)
        remaining -= length
    starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
    order = rng.permutation(len(lengths))
    perm = np.concatenate(
        [np.arange(starts[k], starts[k] + lengths[k]) for k in order]
    ).astype(np.int64)
    return perm


def invert_permutation(perm: np.ndarray) -> np.ndarray:
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size, dtype=perm.dtype)
    return inv


def apply_permutation(items, perm: np.ndarray) -> list:
    return [items[int(k)] for k in perm]


# --------------------------------------------------------------------------
# Synthetic traverse generation

def _drifted_positions(n: int, speed_drift: float, rng: np.random.Generator) -> np.ndarray:
    """Query route positions covering [0, n-1] with slowly varying speed."""
    if speed_drift <= 0.0 or n < 2:
        return np.arange(n, dtype=np.float64)
    u = np.empty(n - 1)
    innov = math.sqrt(1.0 - DRIFT_RHO * DRIFT_RHO)
    u[0] = rng.standard_normal()
    for t in range(1, n - 1):
        u[t] = DRIFT_RHO * u[t - 1] + innov * rng.standard_normal()
    speeds = np.maximum(1.0 + speed_drift * u, 0.1)
    pos = np.concatenate([[0.0], np.cumsum(speeds)])
    return pos * ((n - 1) / pos[-1])


def _helix_latent(positions: np.ndarray, n: int) -> np.ndarray:
    """Map route positions to points on a unit-speed helix of HELIX_LAPS
    laps. Adjacent laps run parallel at distance HELIX_LAP_GAP."""
    lap_len = n / HELIX_LAPS
    radius = lap_len / (2.0 * math.pi)
    angle = positions / radius
    return np.stack(
        [
            radius * np.cos(angle),
            radius * np.sin(angle),
            HELIX_LAP_GAP * positions / lap_len,
        ],
        axis=1,
    )


def _feature_map(dim: int, rng: np.random.Generator):
    """Random Fourier features: a smooth two-scale latent -> descriptor map."""
    n_broad = int(round(FEATURE_BROAD_FRAC * dim))
    scales = np.full(dim, FEATURE_SCALE_LOCAL)
    scales[:n_broad] = FEATURE_SCALE_BROAD
    omega = rng.standard_normal((dim, 3)) / scales[:, None]
    phase = rng.uniform(0.0, 2.0 * math.pi, dim)

    def features(latent: np.ndarray) -> np.ndarray:
        # fixed-order sum of outer products: bit-reproducible across BLAS builds
        proj = phase + latent[:, 0][:, None] * omega[:, 0][None, :]
        proj += latent[:, 1][:, None] * omega[:, 1][None, :]
        proj += latent[:, 2][:, None] * omega[:, 2][None, :]
        return math.sqrt(2.0) * np.cos(proj)

    return features


def _gain_field(positions: np.ndarray, n: int, phases: np.ndarray) -> np.ndarray:
    """Relative sensor gain at each route position (mean 1, slow sway)."""
    sway = np.zeros_like(positions, dtype=np.float64)
    for cycles, weight, phase in zip(GAIN_CYCLES, GAIN_WEIGHTS, phases):
        sway += weight * np.sin(2.0 * math.pi * cycles * positions / n + phase)
    return 1.0 + GAIN_SWAY * sway


def _wifi_frame(
    pos: float,
    ap_pos: np.ndarray,
    radius: float,
    noise_sigma: float,
    rng: np.random.Generator,
) -> dict[int, float]:
    dist = np.abs(ap_pos - pos)
    visible = np.nonzero(dist <= radius)[0]
    rssi = WIFI_RSSI_NEAR - WIFI_RSSI_SPAN * (dist[visible] / radius)
    if noise_sigma > 0.0:
        rssi = rssi + noise_sigma * rng.standard_normal(visible.size)
    return {int(ap): float(v) for ap, v in zip(visible, rssi)}


def synth_generate(spec: SynthSpec) -> tuple[list[Descriptor], list[Descriptor], GroundTruth]:
    """Generate a (reference, query, ground truth) traverse pair.

    Dense mode renders a looping route (helix latent, smooth feature map)
    whose laps alias each other; the query revisits the same route with
    optional speed drift and observation noise, then gets segment-shuffled
    if requested. Wifi mode emits sparse RSSI vectors from access points
    scattered along a 1-d corridor. Ground truth maps each query frame to
    the nearest reference frame.
    """
    if spec.n_ref < 2:
        raise ValueError("n_ref must be >= 2")
    if spec.modality not in ("dense", "wifi"):
        raise ValueError(f"unknown modality {spec.modality!r}")
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    n = spec.n_ref
    positions = _drifted_positions(n, spec.speed_drift, rng)

    if spec.modality == "dense":
        features = _feature_map(spec.descriptor_dim, rng)
        # rng stream order: feature map, gain phases, query noise
        phases = rng.uniform(0.0, 2.0 * math.pi, size=len(GAIN_CYCLES))
        ref_pos = np.arange(n, dtype=np.float64)
        ref_mat = features(_helix_latent(ref_pos, n))
        q_mat = features(_helix_latent(positions, n))
        if spec.noise_sigma > 0.0:
            q_mat = q_mat + spec.noise_sigma * rng.standard_normal(q_mat.shape)
        ref_mat *= _gain_field(ref_pos, n, phases)[:, None]
        q_mat *= _gain_field(positions, n, phases)[:, None]
        refs = [Descriptor.dense(row) for row in ref_mat]
        queries = [Descriptor.dense(row) for row in q_mat]
    else:
        ap_count = spec.descriptor_dim
        radius = max((WIFI_TARGET_ACTIVE * n / ap_count - 1.0) / 2.0, 0.5)
        ap_pos = rng.uniform(0.0, n - 1.0, ap_count)
        refs = [
            Descriptor.sparse(
                _wifi_frame(float(t), ap_pos, radius, spec.noise_sigma, rng), ap_count
            )
            for t in range(n)
        ]
        queries = [
            Descriptor.sparse(
                _wifi_frame(float(p), ap_pos, radius, spec.noise_sigma, rng), ap_count
            )
            for p in positions
        ]

    mapping = {i: int(round(float(p))) for i, p in enumerate(positions)}
    if spec.shuffle is not None:
        perm = shuffle_traverse(
            len(queries), spec.shuffle.min_frac, spec.shuffle.max_frac, spec.shuffle.seed
        )
        queries = apply_permutation(queries, perm)
        mapping = {t: mapping[int(perm[t])] for t in range(len(queries))}
    return refs, queries, GroundTruth(mapping=mapping, tolerance=10)


def benchmark_spec(
    n_ref: int, seed: int, modality: str = "dense", shuffled: bool = False
) -> SynthSpec:
    """Canonical seeded benchmark configuration shared by the experiment
    scripts and the acceptance suite. The shuffled twin differs only in the
    segment permutation."""
    shuffle = ShuffleSpec(seed=seed + 1) if shuffled else None
    if modality == "dense":
        return SynthSpec(
            n_ref=n_ref,
            descriptor_dim=128,
            modality="dense",
            noise_sigma=2.8,
            speed_drift=0.02,
            shuffle=shuffle,
            seed=seed,
        )
    if modality == "wifi":
        return SynthSpec(
            n_ref=n_ref,
            descriptor_dim=709,
            modality="wifi",
            noise_sigma=3.0,
            speed_drift=0.02,
            shuffle=shuffle,
            seed=seed,
        )
    raise ValueError(f"unknown modality {modality!r}")

"""Approximations of the window-score distribution and hypothesis significance.

Four interchangeable fits are supported: a plain Gaussian (moment match),
a robust Gaussian (median location, 1.4826 * MAD scale), and Gaussian
mixtures with 2 or 3 components trained by exactly 10 iterations of EM
from a deterministic percentile initialization. The significance of a
localization hypothesis is the fitted CDF evaluated at the minimum score:
the probability of drawing a value at least that extreme from the
approximated distribution.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

# MAD-to-sigma consistency factor for normally distributed data.
MAD_SCALE = 1.4826

EM_ITERATIONS = 10

METHODS = ("gaussian", "robust_gaussian", "gmm2", "gmm3")

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)
_SQRT_PI = math.sqrt(math.pi)
_TWO_OVER_SQRT_PI = 2.0 / _SQRT_PI


def sigma_floor(mu: float) -> float:
    """Minimum admissible component scale: 1e-9 * max(1, |mu|)."""
    return 1e-9 * max(1.0, abs(mu))


@dataclass
class DistributionFit:
    """A mixture of Gaussian components (single component for the
    non-mixture methods). Weights sum to 1; scales are floored positive."""

    method: str
    weights: np.ndarray
    locs: np.ndarray
    scales: np.ndarray
    loglik_path: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.locs = np.asarray(self.locs, dtype=np.float64)
        self.scales = np.asarray(self.scales, dtype=np.float64)
        if not (self.weights.shape == self.locs.shape == self.scales.shape):
            raise ValueError("component arrays must share a shape")
        if abs(float(self.weights.sum()) - 1.0) > 1e-9:
            raise ValueError("component weights must sum to 1")
        if np.any(self.scales <= 0.0):
            raise ValueError("component scales must be positive")

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]


# --------------------------------------------------------------------------
# Normal CDF from first principles.
#
# erf is evaluated by two documented classical expansions, both accurate to
# well under 1e-7 absolute error in the CDF:
#   |u| <= 3 : erf(u) = 2/sqrt(pi) * u * exp(-u^2) * sum_k (2u^2)^k / (1*3*...*(2k+1))
#              (all-positive confluent hypergeometric series, no cancellation)
#   |u| >  3 : erfc(u) = exp(-u^2)/sqrt(pi) / (u + 1/2/(u + 1/(u + 3/2/(u + ...))))
#              (Legendre continued fraction, evaluated bottom-up at fixed depth)

def _erf_series(u: float) -> float:
    t = 2.0 * u * u
    term = 1.0
    total = 1.0
    k = 1
    while True:
        term *= t / (2.0 * k + 1.0)
        total += term
        k += 1
        if term <= 1e-17 * total or k > 400:
            break
    return _TWO_OVER_SQRT_PI * u * math.exp(-u * u) * total


def _erfc_cf(u: float) -> float:
    # valid for u >= 3; partial numerators n/2, depth 64 is fully converged
    f = 0.0
    for n in range(64, 0, -1):
        f = (n / 2.0) / (u + f)
    return math.exp(-u * u) / (_SQRT_PI * (u + f))


def std_normal_cdf(z: float) -> float:
    u = z / _SQRT2
    if u > 3.0:
        return 1.0 - 0.5 * _erfc_cf(u)
    if u < -3.0:
        return 0.5 * _erfc_cf(-u)
    return 0.5 * (1.0 + _erf_series(u))


def normal_cdf(x: float, mu: float, sigma: float) -> float:
    """Phi((x - mu) / sigma); absolute error <= 1e-7 across the real line."""
    if sigma <= 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return std_normal_cdf((x - mu) / sigma)


def cdf(fit: DistributionFit, x: float) -> float:
    """Mixture CDF: sum_k w_k * Phi((x - mu_k) / sigma_k)."""
    total = 0.0
    for w, mu, s in zip(fit.weights, fit.locs, fit.scales):
        if w > 0.0:
            total += w * std_normal_cdf((x - mu) / s)
    return min(max(total, 0.0), 1.0)


# --------------------------------------------------------------------------
# Fits

def fit_gaussian(scores) -> DistributionFit:
    """Moment-matched single Gaussian (population standard deviation)."""
    x = np.asarray(scores, dtype=np.float64)
    if x.size < 2:
        raise ValueError(f"need at least 2 scores, got {x.size}")
    mu = float(x.mean())
    sigma = max(float(x.std()), sigma_floor(mu))
    return DistributionFit("gaussian", np.array([1.0]), np.array([mu]), np.array([sigma]))


def fit_robust_gaussian(scores) -> DistributionFit:
    """Outlier-robust single Gaussian: median location, 1.4826 * MAD scale."""
    x = np.asarray(scores, dtype=np.float64)
    if x.size < 2:
        raise ValueError(f"need at least 2 scores, got {x.size}")
    med = float(np.median(x))
    mad = float(np.median(np.abs(x - med)))
    sigma = max(MAD_SCALE * mad, sigma_floor(med))
    return DistributionFit(
        "robust_gaussian", np.array([1.0]), np.array([med]), np.array([sigma])
    )


def _em_init(x: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # deterministic, data-driven: component means at inner percentiles,
    # all scales at the global population sigma, uniform weights
    if k == 2:
        locs = np.percentile(x, [25.0, 75.0])
    else:
        locs = np.percentile(x, [25.0, 50.0, 75.0])
    g_sigma = float(x.std())
    scales = np.array([max(g_sigma, sigma_floor(float(m))) for m in locs])
    weights = np.full(k, 1.0 / k)
    return weights, locs.astype(np.float64), scales


def _em_log_resp(x, weights, locs, scales):
    """Shifted log responsibilities; returns (resp, per-sample log-likelihood)."""
    with np.errstate(divide="ignore"):
        logw = np.log(weights)
    z = (x[None, :] - locs[:, None]) / scales[:, None]
    logp = logw[:, None] - np.log(scales)[:, None] - _LOG_SQRT_2PI - 0.5 * z * z
    shift = logp.max(axis=0)
    num = np.exp(logp - shift[None, :])
    denom = num.sum(axis=0)
    return num / denom[None, :], shift + np.log(denom)


def fit_gmm(scores, k: int) -> DistributionFit:
    """K-component 1-D Gaussian mixture, exactly 10 EM iterations.

    Initialization is deterministic (percentile means, global sigma). If
    fewer than k+1 distinct scores are available the fit falls back to the
    single Gaussian with a warning. Components are never pruned; collapsed
    scales are floored. The per-iteration log-likelihood path (length 11,
    including the initial point) is recorded on the returned fit.
    """
    if k not in (2, 3):
        raise ValueError(f"only K=2 or K=3 mixtures are supported, got {k}")
    x = np.asarray(scores, dtype=np.float64)
    if x.size < 2:
        raise ValueError(f"need at least 2 scores, got {x.size}")
    if np.unique(x).size < k + 1:
        warnings.warn(
            f"fewer than {k + 1} distinct scores; falling back to single Gaussian",
            stacklevel=2,
        )
        return fit_gaussian(x)
    n = x.size
    weights, locs, scales = _em_init(x, k)
    ll_path = np.empty(EM_ITERATIONS + 1, dtype=np.float64)
    for it in range(EM_ITERATIONS):
        resp, sample_ll = _em_log_resp(x, weights, locs, scales)
        ll_path[it] = float(sample_ll.sum())
        nk = resp.sum(axis=1)
        alive = nk > 0.0
        safe_nk = np.where(alive, nk, 1.0)
        new_locs = np.where(alive, resp @ x / safe_nk, locs)
        var = np.einsum("kn,kn->k", resp, (x[None, :] - new_locs[:, None]) ** 2) / safe_nk
        floors = np.array([sigma_floor(float(m)) for m in new_locs])
        new_scales = np.where(alive, np.maximum(np.sqrt(var), floors), scales)
        weights = nk / n
        locs, scales = new_locs, new_scales
    _, sample_ll = _em_log_resp(x, weights, locs, scales)
    ll_path[EM_ITERATIONS] = float(sample_ll.sum())
    return DistributionFit(f"gmm{k}", weights, locs, scales, loglik_path=ll_path)


_FITTERS = {
    "gaussian": fit_gaussian,
    "robust_gaussian": fit_robust_gaussian,
    "gmm2": lambda s: fit_gmm(s, 2),
    "gmm3": lambda s: fit_gmm(s, 3),
}


def fit(scores, method: str) -> DistributionFit:
    try:
        fitter = _FITTERS[method]
    except KeyError:
        raise ValueError(f"unknown distribution method {method!r}") from None
    return fitter(scores)


# --------------------------------------------------------------------------
# Significance

def significance(scores, method: str, exclude_min: bool = False) -> tuple[float, int]:
    """Probability of drawing a score as low as the best hypothesis.

    Fits ``method`` to the scores and returns (cdf at the minimum, argmin
    index, ties to the smallest index). Degenerate inputs (a single score,
    or all scores equal) yield p = 1.0: no evidence must never look
    significant. ``exclude_min`` drops the minimum itself from the fit
    sample (off by default).
    """
    x = np.asarray(scores, dtype=np.float64)
    if x.size == 0:
        raise ValueError("need at least one score")
    idx = int(np.argmin(x))
    if x.size == 1 or float(x.max()) == float(x.min()):
        return 1.0, idx
    sample = np.delete(x, idx) if exclude_min else x
    if sample.size < 2 or float(sample.max()) == float(sample.min()):
        return 1.0, idx
    the_fit = fit(sample, method)
    return cdf(the_fit, float(x[idx])), idx

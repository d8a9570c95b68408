"""Static Bayesian integration.

Reliability-weighted Gaussian combination, the discrete-count ideal observer
(bimodal and trimodal), and spatial causal inference with model averaging or
model selection readouts.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit, logsumexp, ndtr

from .core import (
    DegeneratePriorError,
    GaussianEstimate,
    InvalidParameterError,
    check_positive,
    normal_pdf,
)

DEFAULT_MAX_COUNT = 4


@dataclass(frozen=True)
class CombinationResult:
    combined: GaussianEstimate
    weight_1: float
    weight_2: float


def combine_gaussian(
    e1: GaussianEstimate, e2: GaussianEstimate, weight_exponent: float = 1.0
) -> CombinationResult:
    """Reliability-weighted combination of two independent estimates.

    Each cue gets weight proportional to ``(1/sd^2) ** weight_exponent``.
    The default (1) is inverse-variance weighting, whose combined variance is
    ``(1/sd1^2 + 1/sd2^2)^-1``. ``weight_exponent=2`` squares the
    reliabilities before normalising; the reported variance is then the
    actual variance of that (suboptimal) weighted average.

    An infinite ``sd`` marks an uninformative cue and returns the other input
    unchanged.
    """
    if not weight_exponent > 0:
        raise InvalidParameterError("weight_exponent must be > 0")
    v1, v2 = e1.variance, e2.variance
    if math.isinf(v1) and math.isinf(v2):
        raise InvalidParameterError("at least one estimate must have finite sd")
    if math.isinf(v2):
        return CombinationResult(e1, 1.0, 0.0)
    if math.isinf(v1):
        return CombinationResult(e2, 0.0, 1.0)

    k1 = (1.0 / v1) ** weight_exponent
    k2 = (1.0 / v2) ** weight_exponent
    w1 = k1 / (k1 + k2)
    w2 = k2 / (k1 + k2)
    mean = e1.mean + w2 * (e2.mean - e1.mean)
    if weight_exponent == 1.0:
        var = 1.0 / (1.0 / v1 + 1.0 / v2)
    else:
        var = w1 * w1 * v1 + w2 * w2 * v2
    return CombinationResult(GaussianEstimate(mean, math.sqrt(var)), w1, w2)


# ---------------------------------------------------------------------------
# discrete source counts


def coupled_prior(max_count: int = DEFAULT_MAX_COUNT, kappa: float = 1.0, ndim: int = 2) -> np.ndarray:
    """Joint prior over ``ndim`` counts in ``0..max_count``.

    Each pair of modalities reporting the same count multiplies the cell's
    weight by ``kappa``; ``kappa = 1`` gives independent uniform counts.
    """
    if max_count < 0:
        raise InvalidParameterError("max_count must be >= 0")
    if kappa < 1:
        raise InvalidParameterError(f"kappa must be >= 1, got {kappa}")
    grids = np.meshgrid(*([np.arange(max_count + 1)] * ndim), indexing="ij")
    equal_pairs = np.zeros(grids[0].shape)
    for i in range(ndim):
        for j in range(i + 1, ndim):
            equal_pairs += grids[i] == grids[j]
    w = np.power(float(kappa), equal_pairs)
    return w / w.sum()


@dataclass(frozen=True)
class CountPrior:
    """Joint prior ``P(Z_A = i, Z_V = j)``."""

    joint: np.ndarray

    def __post_init__(self):
        joint = np.asarray(self.joint, dtype=float)
        if joint.ndim != 2 or joint.shape[0] != joint.shape[1]:
            raise InvalidParameterError("prior must be a square matrix")
        _check_distribution(joint)
        object.__setattr__(self, "joint", joint)

    @property
    def max_count(self) -> int:
        return self.joint.shape[0] - 1

    @classmethod
    def uniform(cls, max_count: int = DEFAULT_MAX_COUNT) -> "CountPrior":
        return cls(coupled_prior(max_count, 1.0))

    @classmethod
    def coupled(cls, max_count: int = DEFAULT_MAX_COUNT, kappa: float = 4.0) -> "CountPrior":
        return cls(coupled_prior(max_count, kappa))


def _check_distribution(p: np.ndarray) -> None:
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise InvalidParameterError("prior entries must be finite and >= 0")
    if abs(p.sum() - 1.0) > 1e-9:
        raise InvalidParameterError(f"prior must sum to 1, sums to {p.sum()}")


@dataclass(frozen=True)
class CountPosterior:
    joint: np.ndarray
    marginal_a: np.ndarray
    marginal_v: np.ndarray

    @property
    def mode_a(self) -> int:
        return int(np.argmax(self.marginal_a))

    @property
    def mode_v(self) -> int:
        return int(np.argmax(self.marginal_v))


def count_log_likelihood(obs: Optional[float], sigma: float, max_count: int) -> np.ndarray:
    """Log Gaussian likelihood of ``obs`` under each count, up to a constant.

    ``obs=None`` or ``sigma=inf`` means the modality carries no information.
    """
    counts = np.arange(max_count + 1, dtype=float)
    if obs is None or math.isinf(sigma):
        return np.zeros_like(counts)
    check_positive("sigma", sigma)
    r = (obs - counts) / sigma
    return -0.5 * r * r


def _posterior_tensor(observations, sigmas, prior: np.ndarray) -> np.ndarray:
    size = prior.shape[0]
    with np.errstate(divide="ignore"):
        log_post = np.log(prior)
    for axis, (obs, sigma) in enumerate(zip(observations, sigmas)):
        shape = [1] * prior.ndim
        shape[axis] = size
        log_post = log_post + count_log_likelihood(obs, sigma, size - 1).reshape(shape)
    peak = log_post.max()
    if not np.isfinite(peak):
        raise DegeneratePriorError("posterior has no mass: prior excludes every plausible count")
    w = np.exp(log_post - peak)
    return w / w.sum()


def count_posterior(
    a_obs: Optional[float],
    v_obs: Optional[float],
    sigma_a: float,
    sigma_v: float,
    prior: CountPrior,
) -> CountPosterior:
    """Posterior over (auditory count, visual count) given noisy observations.

    ``joint[i, j]`` is proportional to
    ``N(a_obs; i, sigma_a) * N(v_obs; j, sigma_v) * prior[i, j]``.
    The product is formed in log space so sharp likelihoods don't underflow.
    """
    check_positive("sigma_a", sigma_a)
    check_positive("sigma_v", sigma_v)
    joint = _posterior_tensor((a_obs, v_obs), (sigma_a, sigma_v), prior.joint)
    return CountPosterior(joint, joint.sum(axis=1), joint.sum(axis=0))


@dataclass(frozen=True)
class TrimodalPosterior:
    joint: np.ndarray

    def marginal(self, axis: int) -> np.ndarray:
        others = tuple(i for i in range(3) if i != axis)
        return self.joint.sum(axis=others)

    @property
    def marginal_a(self) -> np.ndarray:
        return self.marginal(0)

    @property
    def marginal_v(self) -> np.ndarray:
        return self.marginal(1)

    @property
    def marginal_t(self) -> np.ndarray:
        return self.marginal(2)

    def mode(self, axis: int) -> int:
        return int(np.argmax(self.marginal(axis)))


def count_posterior_trimodal(
    a_obs: Optional[float],
    v_obs: Optional[float],
    t_obs: Optional[float],
    sigmas: Sequence[float],
    prior: np.ndarray,
) -> TrimodalPosterior:
    """Audio-visuo-tactile extension: axes are (auditory, visual, tactile)."""
    prior = np.asarray(prior, dtype=float)
    if prior.ndim != 3 or len(set(prior.shape)) != 1:
        raise InvalidParameterError("trimodal prior must be a cubic 3-D tensor")
    _check_distribution(prior)
    if len(sigmas) != 3:
        raise InvalidParameterError("need three sigmas")
    for s in sigmas:
        check_positive("sigma", s)
    return TrimodalPosterior(_posterior_tensor((a_obs, v_obs, t_obs), sigmas, prior))


# ---------------------------------------------------------------------------
# spatial causal inference


class Readout(str, enum.Enum):
    MODEL_AVERAGING = "averaging"
    MODEL_SELECTION = "selection"


def _validate_ci(sigma_a, sigma_v, sigma_prior, p_common):
    check_positive("sigma_a", sigma_a)
    check_positive("sigma_v", sigma_v)
    check_positive("sigma_prior", sigma_prior)
    if not 0.0 <= p_common <= 1.0:
        raise InvalidParameterError(f"p_common must be in [0, 1], got {p_common}")


def _log_likelihood_common(x_a, x_v, sa2, sv2, sp2, mu):
    var = sa2 * sv2 + sa2 * sp2 + sv2 * sp2
    quad = ((x_a - x_v) ** 2 * sp2 + (x_a - mu) ** 2 * sv2 + (x_v - mu) ** 2 * sa2) / var
    return -0.5 * quad - math.log(2.0 * math.pi) - 0.5 * math.log(var)


def _log_likelihood_separate(x_a, x_v, sa2, sv2, sp2, mu):
    va, vv = sa2 + sp2, sv2 + sp2
    return (
        -0.5 * ((x_a - mu) ** 2 / va + (x_v - mu) ** 2 / vv)
        - math.log(2.0 * math.pi)
        - 0.5 * math.log(va * vv)
    )


def common_cause_posterior(
    x_a: float,
    x_v: float,
    sigma_a: float,
    sigma_v: float,
    sigma_prior: float,
    p_common: float,
    prior_mean: float = 0.0,
) -> float:
    """Posterior probability that both measurements come from one source.

    Sources are drawn from ``N(prior_mean, sigma_prior^2)``; measurements add
    independent Gaussian noise. Both marginal likelihoods are closed form.
    """
    _validate_ci(sigma_a, sigma_v, sigma_prior, p_common)
    if p_common == 0.0:
        return 0.0
    if p_common == 1.0:
        return 1.0
    sa2, sv2, sp2 = sigma_a**2, sigma_v**2, sigma_prior**2
    log_c1 = _log_likelihood_common(x_a, x_v, sa2, sv2, sp2, prior_mean) + math.log(p_common)
    log_c2 = _log_likelihood_separate(x_a, x_v, sa2, sv2, sp2, prior_mean) + math.log1p(-p_common)
    return float(expit(log_c1 - log_c2))


def localize_with_causal_inference(
    x_a: float,
    x_v: float,
    sigma_a: float,
    sigma_v: float,
    sigma_prior: float,
    p_common: float,
    readout: Readout = Readout.MODEL_AVERAGING,
    prior_mean: float = 0.0,
) -> tuple[float, float]:
    """Auditory and visual location estimates under causal inference.

    The common-cause estimate fuses both measurements with the spatial
    prior; the separate-cause estimate fuses each measurement with the prior
    alone. Model averaging mixes them by the posterior of a common cause;
    model selection takes the more probable structure.
    """
    readout = Readout(readout)
    post = common_cause_posterior(x_a, x_v, sigma_a, sigma_v, sigma_prior, p_common, prior_mean)
    prior = GaussianEstimate(prior_mean, sigma_prior)
    cue_a = GaussianEstimate(x_a, sigma_a)
    cue_v = GaussianEstimate(x_v, sigma_v)
    fused = combine_gaussian(combine_gaussian(cue_a, cue_v).combined, prior).combined.mean
    alone_a = combine_gaussian(cue_a, prior).combined.mean
    alone_v = combine_gaussian(cue_v, prior).combined.mean

    if readout is Readout.MODEL_SELECTION:
        if post > 0.5:
            return fused, fused
        return alone_a, alone_v
    return (
        post * fused + (1.0 - post) * alone_a,
        post * fused + (1.0 - post) * alone_v,
    )


@functools.lru_cache(maxsize=8)
def _legendre_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def visual_count_report_distribution(
    n_a: Optional[float],
    n_v: float,
    sigma_a: float,
    sigma_v: float,
    prior: CountPrior,
    n_nodes: int = 160,
) -> np.ndarray:
    """Probability of each reported visual count (the posterior mode of Z_V).

    Observations are ``a ~ N(n_a, sigma_a)`` and ``v ~ N(n_v, sigma_v)``;
    ``n_a=None`` means no sound. For fixed ``a`` the log posterior of each
    visual count is linear in ``v``, so the region of ``v`` where count ``j``
    wins is a union of exact intervals. Only the ``a`` integral is numerical
    (Gauss-Legendre over +-8 sd).
    """
    check_positive("sigma_a", sigma_a)
    check_positive("sigma_v", sigma_v)
    size = prior.max_count + 1
    counts = np.arange(size, dtype=float)
    with np.errstate(divide="ignore"):
        log_prior = np.log(prior.joint)

    if n_a is None:
        weights = np.ones(1)
        log_col = logsumexp(log_prior, axis=0)[None, :]
    else:
        x, w = _legendre_nodes(n_nodes)
        half = 8.0 * sigma_a
        nodes = n_a + half * x
        weights = w * half * normal_pdf(nodes, n_a, sigma_a)
        la = -0.5 * ((nodes[:, None] - counts[None, :]) / sigma_a) ** 2
        log_col = logsumexp(la[:, :, None] + log_prior[None, :, :], axis=1)

    sv2 = sigma_v * sigma_v
    intercept = log_col - 0.5 * counts**2 / sv2
    slope = counts / sv2
    jj, ll = np.triu_indices(size, k=1)
    with np.errstate(invalid="ignore"):
        breaks = (intercept[:, jj] - intercept[:, ll]) / (slope[ll] - slope[jj])
    breaks = np.where(np.isnan(breaks), -np.inf, breaks)
    k = breaks.shape[0]
    edges = np.concatenate(
        [np.full((k, 1), -np.inf), np.sort(breaks, axis=1), np.full((k, 1), np.inf)], axis=1
    )
    lo, hi = edges[:, :-1], edges[:, 1:]
    mid = np.where(
        np.isfinite(lo) & np.isfinite(hi),
        0.5 * (lo + hi),
        np.where(np.isfinite(hi), hi - 1.0, np.where(np.isfinite(lo), lo + 1.0, 0.0)),
    )
    scores = intercept[:, None, :] + mid[:, :, None] * slope[None, None, :]
    winner = np.argmax(scores, axis=2)
    mass = ndtr((hi - n_v) / sigma_v) - ndtr((lo - n_v) / sigma_v)
    probs = np.zeros(size)
    np.add.at(probs, winner.ravel(), (weights[:, None] * mass).ravel())
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()

"""Time-window-of-integration (TWIN) model.

A first-stage race between exponential peripheral latencies decides which
modality arrives first; the second stage integrates only if the other
modality arrives within a window whose width grows when the winner is the
less reliable modality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import InvalidParameterError, Modality, RngStream, StimulusEvent, check_positive


@dataclass(frozen=True)
class TwinParams:
    rate_a: float
    rate_v: float
    base_window_ms: float
    adapt_gain: float = 0.0
    reliability_a: float = 1.0
    reliability_v: float = 1.0
    second_stage_unimodal_ms: float = 250.0
    second_stage_bimodal_ms: float = 200.0
    second_stage_noise_ms: float = 20.0

    def __post_init__(self):
        check_positive("rate_a", self.rate_a)
        check_positive("rate_v", self.rate_v)
        # 0 is accepted as the degenerate "no window" limit
        if not self.base_window_ms >= 0:
            raise InvalidParameterError("base_window_ms must be >= 0")
        if self.adapt_gain < 0:
            raise InvalidParameterError("adapt_gain must be >= 0")
        check_positive("reliability_a", self.reliability_a)
        check_positive("reliability_v", self.reliability_v)
        check_positive("second_stage_unimodal_ms", self.second_stage_unimodal_ms)
        check_positive("second_stage_bimodal_ms", self.second_stage_bimodal_ms)
        if self.second_stage_noise_ms < 0:
            raise InvalidParameterError("second_stage_noise_ms must be >= 0")
        if self.second_stage_bimodal_ms > self.second_stage_unimodal_ms:
            raise InvalidParameterError("bimodal second stage must not be slower than unimodal")

    def reliability(self, modality: Modality) -> float:
        if modality is Modality.AUDITORY:
            return self.reliability_a
        if modality is Modality.VISUAL:
            return self.reliability_v
        raise InvalidParameterError(f"TWIN covers auditory and visual only, got {modality}")


def _other(modality: Modality) -> Modality:
    return Modality.VISUAL if modality is Modality.AUDITORY else Modality.AUDITORY


def twin_window(winner: Modality, p: TwinParams) -> float:
    """Integration window opened by ``winner``.

    ``base * (1 + gain * max(0, r_loser - r_winner) / r_winner)``: it only
    widens when the losing modality is the more reliable one.
    """
    winner = Modality(winner)
    r_win = p.reliability(winner)
    r_lose = p.reliability(_other(winner))
    return p.base_window_ms * (1.0 + p.adapt_gain * max(0.0, r_lose - r_win) / r_win)


def _difference_cdf(u, rate_a: float, rate_v: float):
    """CDF of ``Y - X`` with ``X ~ Exp(rate_a)``, ``Y ~ Exp(rate_v)``."""
    u = np.asarray(u, dtype=float)
    total = rate_a + rate_v
    with np.errstate(over="ignore"):
        neg = rate_v / total * np.exp(rate_a * np.minimum(u, 0.0))
        pos = 1.0 - rate_a / total * np.exp(-rate_v * np.maximum(u, 0.0))
    return np.where(u < 0, neg, pos)


def integration_probability(p: TwinParams, onset_a_ms: float = 0.0, onset_v_ms: float = 0.0) -> float:
    """Closed-form probability that the second stage integrates.

    With ``D = D_V - D_A`` the arrival difference, integration happens when
    ``0 <= D <= window(A)`` (audition wins) or ``-window(V) <= D < 0``.
    """
    shift = onset_v_ms - onset_a_ms
    w_a = twin_window(Modality.AUDITORY, p)
    w_v = twin_window(Modality.VISUAL, p)
    # mass of D on [-w_v, w_a]
    upper = 1.0 if math.isinf(w_a) else float(_difference_cdf(w_a - shift, p.rate_a, p.rate_v))
    lower = 0.0 if math.isinf(w_v) else float(_difference_cdf(-w_v - shift, p.rate_a, p.rate_v))
    return upper - lower


@dataclass(frozen=True)
class TwinOutcome:
    integrated: bool
    rt_ms: float
    winner: Modality


def _second_stage(p: TwinParams, integrated, noise):
    stage = np.where(integrated, p.second_stage_bimodal_ms, p.second_stage_unimodal_ms)
    return stage + p.second_stage_noise_ms * noise


def twin_trial(stim_a: StimulusEvent, stim_v: StimulusEvent, p: TwinParams, rng: RngStream) -> TwinOutcome:
    """One audio-visual trial. Draw order: auditory latency, visual latency,
    second-stage noise."""
    if stim_a.modality is not Modality.AUDITORY or stim_v.modality is not Modality.VISUAL:
        raise InvalidParameterError("twin_trial needs one auditory and one visual stimulus")
    d_a = stim_a.onset_ms + rng.gen.exponential(1.0 / p.rate_a)
    d_v = stim_v.onset_ms + rng.gen.exponential(1.0 / p.rate_v)
    noise = rng.gen.exponential(1.0)
    winner = Modality.AUDITORY if d_a <= d_v else Modality.VISUAL
    integrated = abs(d_v - d_a) <= twin_window(winner, p)
    rt = min(d_a, d_v) + float(_second_stage(p, integrated, noise))
    return TwinOutcome(bool(integrated), rt, winner)


@dataclass
class TwinBatch:
    integrated: np.ndarray
    rt_ms: np.ndarray
    auditory_won: np.ndarray


def twin_simulate_batch(
    p: TwinParams, n: int, rng: RngStream, onset_a_ms: float = 0.0, onset_v_ms: float = 0.0
) -> TwinBatch:
    """Vectorised version of :func:`twin_trial` for ``n`` trials."""
    d_a = onset_a_ms + rng.gen.exponential(1.0 / p.rate_a, size=n)
    d_v = onset_v_ms + rng.gen.exponential(1.0 / p.rate_v, size=n)
    noise = rng.gen.exponential(1.0, size=n)
    a_won = d_a <= d_v
    window = np.where(
        a_won, twin_window(Modality.AUDITORY, p), twin_window(Modality.VISUAL, p)
    )
    integrated = np.abs(d_v - d_a) <= window
    rt = np.minimum(d_a, d_v) + _second_stage(p, integrated, noise)
    return TwinBatch(integrated, rt, a_won)

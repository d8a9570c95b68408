"""Time-varying optimal cue combination feeding a diffusion decision.

A combined sensitivity profile ``d(t)`` is built from visual and vestibular
temporal sensitivities; the accumulator's drift at time ``t`` is
``heading_sign * k_comb * d(t)``. Under optimal combination
``k_comb * d(t) = sqrt(k_vis^2 v(t)^2 + k_vest^2 a(t)^2)``, so a profile with
one modality silent reproduces that modality's unimodal drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .accumulators import BATCH_CHUNK, DEFAULT_MAX_STEPS, Choice, diffuse
from .core import (
    InvalidParameterError,
    RngStream,
    check_positive,
    chunk_sizes,
    parallel_map,
    substream,
)

_GRID_TOL = 1e-9


@dataclass(frozen=True)
class SensitivityProfile:
    """Non-negative sensitivity samples on a uniform time grid.

    Sample ``k`` covers ``[t0 + k*step, t0 + (k+1)*step)``.
    """

    t0_ms: float
    step_ms: float
    values: np.ndarray

    def __post_init__(self):
        check_positive("step_ms", self.step_ms)
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise InvalidParameterError("profile values must be 1-D")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise InvalidParameterError("profile values must be finite and >= 0")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_samples(cls, times_ms, values) -> "SensitivityProfile":
        times = np.asarray(times_ms, dtype=float)
        if times.size != np.size(values):
            raise InvalidParameterError("times and values differ in length")
        if times.size < 2:
            raise InvalidParameterError("need at least two samples to infer the grid")
        steps = np.diff(times)
        if np.ptp(steps) > _GRID_TOL * max(1.0, abs(steps[0])):
            raise InvalidParameterError("profile grid must be uniform")
        return cls(float(times[0]), float(steps[0]), values)

    @classmethod
    def constant(cls, value: float, duration_ms: float, step_ms: float = 1.0) -> "SensitivityProfile":
        n = int(round(duration_ms / step_ms))
        return cls(0.0, step_ms, np.full(n, float(value)))

    @property
    def times(self) -> np.ndarray:
        return self.t0_ms + self.step_ms * np.arange(self.values.size)

    @property
    def duration_ms(self) -> float:
        return self.step_ms * self.values.size

    def same_grid(self, other: "SensitivityProfile") -> bool:
        return (
            self.values.size == other.values.size
            and abs(self.t0_ms - other.t0_ms) <= _GRID_TOL
            and abs(self.step_ms - other.step_ms) <= _GRID_TOL
        )

    def scaled(self, factor: float) -> "SensitivityProfile":
        return SensitivityProfile(self.t0_ms, self.step_ms, self.values * factor)

    def delayed(self, delay_ms: float) -> "SensitivityProfile":
        """Shift the profile later by ``delay_ms``, padding with zeros."""
        if delay_ms == 0:
            return self
        shifted = np.interp(self.times - delay_ms, self.times, self.values, left=0.0, right=0.0)
        return SensitivityProfile(self.t0_ms, self.step_ms, shifted)


def gaussian_velocity_profile(
    duration_ms: float = 2000.0, sigma_ms: float = 250.0, step_ms: float = 1.0
) -> SensitivityProfile:
    """Bell-shaped velocity profile peaking at 1 mid-trial (a convention, not data)."""
    t = step_ms * np.arange(int(round(duration_ms / step_ms)))
    mid = 0.5 * duration_ms
    return SensitivityProfile(0.0, step_ms, np.exp(-0.5 * ((t - mid) / sigma_ms) ** 2))


def gaussian_acceleration_profile(
    duration_ms: float = 2000.0, sigma_ms: float = 250.0, step_ms: float = 1.0
) -> SensitivityProfile:
    """Magnitude of the derivative of :func:`gaussian_velocity_profile`, peak 1."""
    t = step_ms * np.arange(int(round(duration_ms / step_ms)))
    mid = 0.5 * duration_ms
    u = (t - mid) / sigma_ms
    acc = np.abs(u) * np.exp(-0.5 * u * u)
    return SensitivityProfile(0.0, step_ms, acc / acc.max())


@dataclass(frozen=True)
class DynamicDdmParams:
    k_vis: float
    k_vest: float
    noise_c: float
    threshold_z: float
    k_comb: Optional[float] = None
    heading_sign: int = 1
    nondecision_ms: float = 0.0
    optimal_combination: bool = True
    latency_vis_ms: float = 0.0
    latency_vest_ms: float = 0.0

    def __post_init__(self):
        check_positive("k_vis", self.k_vis)
        check_positive("k_vest", self.k_vest)
        check_positive("noise_c", self.noise_c)
        check_positive("threshold_z", self.threshold_z)
        if self.heading_sign not in (1, -1):
            raise InvalidParameterError("heading_sign must be +1 or -1")
        if self.nondecision_ms < 0:
            raise InvalidParameterError("nondecision_ms must be >= 0")
        optimal = math.hypot(self.k_vis, self.k_vest)
        if self.optimal_combination:
            if self.k_comb is not None and abs(self.k_comb - optimal) > 1e-12 * optimal:
                raise InvalidParameterError(
                    "k_comb must equal sqrt(k_vis^2 + k_vest^2) under optimal combination"
                )
        elif self.k_comb is None:
            raise InvalidParameterError("k_comb is required when optimal_combination is off")
        else:
            check_positive("k_comb", self.k_comb)

    @property
    def combined_k(self) -> float:
        if self.optimal_combination:
            return math.hypot(self.k_vis, self.k_vest)
        return float(self.k_comb)


def combined_sensitivity(
    v: SensitivityProfile, a: SensitivityProfile, p: DynamicDdmParams
) -> SensitivityProfile:
    """``d(t) = sqrt((k_vis/k_comb)^2 v(t)^2 + (k_vest/k_comb)^2 a(t)^2)``."""
    if not v.same_grid(a):
        raise InvalidParameterError("visual and vestibular profiles must share a grid")
    v = v.delayed(p.latency_vis_ms)
    a = a.delayed(p.latency_vest_ms)
    k2 = p.combined_k**2
    w_vis, w_vest = p.k_vis**2 / k2, p.k_vest**2 / k2
    # work relative to the pointwise max so tiny values don't underflow when squared
    scale = np.maximum(v.values, a.values)
    safe = np.where(scale > 0, scale, 1.0)
    rv2, ra2 = (v.values / safe) ** 2, (a.values / safe) ** 2
    if p.optimal_combination:
        # weights sum to 1; with a == v this is scale * sqrt(1), i.e. v exactly
        d2 = rv2 + w_vest * (ra2 - rv2)
    else:
        d2 = w_vis * rv2 + w_vest * ra2
    return SensitivityProfile(v.t0_ms, v.step_ms, scale * np.sqrt(np.maximum(d2, 0.0)))


def _drift_schedule(d: SensitivityProfile, p: DynamicDdmParams, dt_ms: float) -> np.ndarray:
    if d.values.size == 0:
        raise InvalidParameterError("empty sensitivity profile")
    check_positive("dt_ms", dt_ms)
    ratio = d.step_ms / dt_ms
    sub = int(round(ratio))
    if sub < 1 or abs(ratio - sub) > 1e-9 * ratio:
        raise InvalidParameterError("dt_ms must divide the profile grid step")
    return p.heading_sign * p.combined_k * np.repeat(d.values, sub)


def _as_choices(upper, resolved, final_x):
    # unabsorbed paths at stimulus end: forced choice by the sign of the evidence
    return np.where(resolved, upper, final_x > 0)


def dynamic_ddm_simulate(
    d: SensitivityProfile,
    p: DynamicDdmParams,
    dt_ms: float,
    rng: RngStream,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> tuple[Choice, float]:
    drift = _drift_schedule(d, p, dt_ms)
    out = diffuse(1, drift, p.noise_c, p.threshold_z, 0.0, dt_ms, rng.gen, max_steps)
    up = bool(_as_choices(out.upper, out.resolved, out.final_x)[0])
    return (Choice.UPPER if up else Choice.LOWER), float(out.decision_ms[0]) + p.nondecision_ms


@dataclass
class DynamicBatch:
    upper: np.ndarray
    rt_ms: np.ndarray
    heading_sign: int

    @property
    def accuracy(self) -> float:
        correct = self.upper if self.heading_sign > 0 else ~self.upper
        return float(correct.mean())


def dynamic_ddm_simulate_batch(
    d: SensitivityProfile,
    p: DynamicDdmParams,
    n_trials: int,
    seed: int,
    dt_ms: float = 1.0,
    chunk: int = BATCH_CHUNK,
) -> DynamicBatch:
    """Chunked batch simulation; chunk ``i`` uses ``substream(seed, i)``."""
    drift = _drift_schedule(d, p, dt_ms)
    sizes = chunk_sizes(n_trials, chunk)

    def run(i: int):
        out = diffuse(sizes[i], drift, p.noise_c, p.threshold_z, 0.0, dt_ms, substream(seed, i).gen)
        return _as_choices(out.upper, out.resolved, out.final_x), out.decision_ms

    parts = parallel_map(run, range(len(sizes)))
    upper = np.concatenate([u for u, _ in parts]) if parts else np.zeros(0, dtype=bool)
    rt = np.concatenate([t for _, t in parts]) + p.nondecision_ms if parts else np.zeros(0)
    return DynamicBatch(upper, rt, p.heading_sign)

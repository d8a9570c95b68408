"""Race, drift-diffusion and coactivation models of multisensory reaction time.

Units: time in ms, drift in evidence units per ms, noise in evidence units
per sqrt(ms).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.special import ndtr, ndtri

from .core import (
    InvalidParameterError,
    RngStream,
    SimulationTimeoutError,
    check_positive,
    chunk_sizes,
    parallel_map,
    substream,
)

DEFAULT_DT_MS = 0.01
DEFAULT_MAX_STEPS = 10**7
BATCH_CHUNK = 1 << 16
# below this the bridge crossing probability is treated as zero and no uniform is drawn
_BRIDGE_EPS = 1e-14


class Choice(str, enum.Enum):
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class DdmParams:
    drift_A: float
    noise_c: float
    threshold_z: float
    nondecision_ms: float = 0.0
    start_x0: float = 0.0

    def __post_init__(self):
        check_positive("noise_c", self.noise_c)
        check_positive("threshold_z", self.threshold_z)
        if self.nondecision_ms < 0:
            raise InvalidParameterError("nondecision_ms must be >= 0")
        if not abs(self.start_x0) < self.threshold_z:
            raise InvalidParameterError("|start_x0| must be < threshold_z")


# ---------------------------------------------------------------------------
# race model


@dataclass(frozen=True)
class ExponentialLatency:
    rate: float

    def __post_init__(self):
        check_positive("rate", self.rate)

    def sample(self, gen: np.random.Generator, n: int) -> np.ndarray:
        return gen.exponential(1.0 / self.rate, size=n)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t > 0, -np.expm1(-self.rate * np.maximum(t, 0.0)), 0.0)


@dataclass(frozen=True)
class ShiftedGaussianLatency:
    """Gaussian latency truncated below at ``floor`` (>= 0)."""

    mean: float
    sd: float
    floor: float = 0.0

    def __post_init__(self):
        check_positive("sd", self.sd)
        if self.floor < 0:
            raise InvalidParameterError("floor must be >= 0")

    def _lower_mass(self) -> float:
        return float(ndtr((self.floor - self.mean) / self.sd))

    def sample(self, gen: np.random.Generator, n: int) -> np.ndarray:
        lo = self._lower_mass()
        u = lo + (1.0 - lo) * gen.random(n)
        return np.maximum(self.mean + self.sd * ndtri(u), self.floor)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        lo = self._lower_mass()
        raw = (ndtr((t - self.mean) / self.sd) - lo) / (1.0 - lo)
        return np.where(t > self.floor, np.clip(raw, 0.0, 1.0), 0.0)


ChannelLatencyModel = Union[ExponentialLatency, ShiftedGaussianLatency]


def race_time(d_a: float, d_v: float) -> float:
    """Processing time of the faster channel."""
    for name, d in (("d_a", d_a), ("d_v", d_v)):
        if not (math.isfinite(d) and d >= 0):
            raise InvalidParameterError(f"{name} must be finite and >= 0, got {d}")
    return min(d_a, d_v)


def race_simulate(
    model_a: ChannelLatencyModel, model_v: ChannelLatencyModel, n: int, rng: RngStream
) -> np.ndarray:
    """Sample ``n`` bimodal race times; the auditory draws come first."""
    d_a = model_a.sample(rng.gen, n)
    d_v = model_v.sample(rng.gen, n)
    return np.minimum(d_a, d_v)


def race_cdf(model_a: ChannelLatencyModel, model_v: ChannelLatencyModel, t):
    return 1.0 - (1.0 - model_a.cdf(t)) * (1.0 - model_v.cdf(t))


# ---------------------------------------------------------------------------
# analytic DDM


def _upper_probability(A: float, c: float, z: float, x0: float) -> float:
    if A < 0:
        return 1.0 - _upper_probability(-A, c, z, -x0)
    k = 2.0 * A / (c * c)
    if k * z < 1e-12:
        return (x0 + z) / (2.0 * z)
    return math.expm1(-k * (x0 + z)) / math.expm1(-2.0 * k * z)


def ddm_error_rate(p: DdmParams) -> float:
    """Probability of absorbing at the lower threshold.

    With ``start_x0 = 0`` this is ``1 / (1 + exp(2 A z / c^2))``.
    """
    A, c, z = p.drift_A, p.noise_c, p.threshold_z
    if p.start_x0 == 0.0:
        x = 2.0 * A * z / (c * c)
        # 1/(1+e^x) written to avoid overflow for large |x|
        return float(0.5 * (1.0 - math.tanh(0.5 * x)))
    return 1.0 - _upper_probability(A, c, z, p.start_x0)


def ddm_mean_rt(p: DdmParams) -> float:
    """Mean response time: ``(z/A) tanh(A z / c^2)`` plus non-decision time.

    At ``A = 0`` the removable singularity is replaced by its limit
    ``z^2 / c^2``. A non-zero start point uses the general gambler's-ruin
    expression, which reduces to the tanh form at ``x0 = 0``.
    """
    A, c, z, x0 = p.drift_A, p.noise_c, p.threshold_z, p.start_x0
    c2 = c * c
    if abs(A * z / c2) < 1e-9:
        decision = (z * z - x0 * x0) / c2
    elif x0 == 0.0:
        decision = (z / A) * math.tanh(A * z / c2)
    else:
        p_up = _upper_probability(A, c, z, x0)
        decision = (2.0 * z * p_up - z - x0) / A
    return decision + p.nondecision_ms


# ---------------------------------------------------------------------------
# Monte-Carlo DDM


@dataclass
class DiffusionOutcome:
    """Per-trial result of a batch of diffusion paths.

    ``resolved`` is False for paths still inside the thresholds when a finite
    drift schedule ran out; their ``decision_ms`` is the schedule length and
    ``final_x`` their accumulated evidence.
    """

    upper: np.ndarray
    decision_ms: np.ndarray
    resolved: np.ndarray
    final_x: np.ndarray


def diffuse(
    n: int,
    drift,
    noise_c: float,
    threshold_z: float,
    start_x0: float,
    dt_ms: float,
    gen: np.random.Generator,
    max_steps: int = DEFAULT_MAX_STEPS,
    bridge: bool = True,
) -> DiffusionOutcome:
    """Euler-Maruyama integration of ``dX = A dt + c dW`` for ``n`` paths.

    ``drift`` is either a constant or a per-step array (held constant within
    each step); an array ends the simulation after ``len(drift)`` steps.

    With ``bridge=True`` a path whose endpoints both lie inside the
    thresholds is still absorbed with the Brownian-bridge probability
    ``exp(-2 (z - x_n)(z - x_{n+1}) / (c^2 dt))`` (and its mirror for ``-z``),
    which removes the O(sqrt(dt)) overshoot bias of discrete monitoring.
    Crossing times use linear interpolation for endpoint crossings and the
    step midpoint for bridge crossings.
    """
    if not dt_ms > 0:
        raise InvalidParameterError(f"dt_ms must be > 0, got {dt_ms}")
    if noise_c < 0:
        raise InvalidParameterError("noise_c must be >= 0")
    z = float(threshold_z)
    schedule = None if np.ndim(drift) == 0 else np.asarray(drift, dtype=float)
    n_steps = max_steps if schedule is None else min(len(schedule), max_steps)

    upper = np.zeros(n, dtype=bool)
    decision = np.full(n, np.nan)
    resolved = np.zeros(n, dtype=bool)
    final_x = np.zeros(n)

    x = np.full(n, float(start_x0))
    idx = np.arange(n)
    sd_step = noise_c * math.sqrt(dt_ms)
    bridge_scale = -2.0 / (noise_c * noise_c * dt_ms) if (bridge and noise_c > 0) else None

    step = 0
    while idx.size and step < n_steps:
        a = float(drift) if schedule is None else schedule[step]
        t0 = step * dt_ms
        xn = x + a * dt_ms + sd_step * gen.standard_normal(idx.size)
        hit_up = xn >= z
        hit_lo = xn <= -z
        hit = hit_up | hit_lo
        if hit.any():
            xs, xe = x[hit], xn[hit]
            target = np.where(hit_up[hit], z, -z)
            frac = np.clip((target - xs) / (xe - xs), 0.0, 1.0)
            done = idx[hit]
            upper[done] = hit_up[hit]
            decision[done] = t0 + frac * dt_ms
            resolved[done] = True
        if bridge_scale is not None:
            inside = ~hit
            p_up = np.exp(bridge_scale * (z - x) * (z - xn))
            p_lo = np.exp(bridge_scale * (z + x) * (z + xn))
            cand = inside & ((p_up + p_lo) > _BRIDGE_EPS)
            if cand.any():
                u = gen.random(int(cand.sum()))
                pu, pl = p_up[cand], p_lo[cand]
                b_up = u < pu
                b_lo = ~b_up & (u < pu + pl)
                b_hit = b_up | b_lo
                if b_hit.any():
                    where = np.flatnonzero(cand)[b_hit]
                    done = idx[where]
                    upper[done] = b_up[b_hit]
                    decision[done] = t0 + 0.5 * dt_ms
                    resolved[done] = True
                    hit = hit.copy()
                    hit[where] = True
        keep = ~hit
        x, idx = xn[keep], idx[keep]
        step += 1

    if idx.size:
        if schedule is None or step >= max_steps:
            raise SimulationTimeoutError(
                f"{idx.size} path(s) not absorbed after {step} steps"
            )
        decision[idx] = step * dt_ms
        final_x[idx] = x
    return DiffusionOutcome(upper, decision, resolved, final_x)


def ddm_simulate(
    p: DdmParams,
    dt_ms: float,
    rng: RngStream,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> tuple[Choice, float]:
    """Simulate one DDM trial; the RT includes the non-decision time."""
    out = diffuse(1, p.drift_A, p.noise_c, p.threshold_z, p.start_x0, dt_ms, rng.gen, max_steps)
    choice = Choice.UPPER if out.upper[0] else Choice.LOWER
    return choice, float(out.decision_ms[0]) + p.nondecision_ms


@dataclass
class DdmBatch:
    upper: np.ndarray
    rt_ms: np.ndarray

    @property
    def error_rate(self) -> float:
        return float(1.0 - self.upper.mean())

    @property
    def mean_rt(self) -> float:
        return float(self.rt_ms.mean())


def ddm_simulate_batch(
    p: DdmParams,
    n_trials: int,
    seed: int,
    dt_ms: float = DEFAULT_DT_MS,
    max_steps: int = DEFAULT_MAX_STEPS,
    chunk: int = BATCH_CHUNK,
) -> DdmBatch:
    """Vectorised Monte-Carlo DDM.

    Trials are cut into fixed chunks of ``chunk`` trials; chunk ``i`` draws
    from ``substream(seed, i)``. The partition never depends on the thread
    count, so the output is identical for any degree of parallelism.
    """
    sizes = chunk_sizes(n_trials, chunk)

    def run(i: int) -> DiffusionOutcome:
        rng = substream(seed, i)
        return diffuse(
            sizes[i], p.drift_A, p.noise_c, p.threshold_z, p.start_x0, dt_ms, rng.gen, max_steps
        )

    parts = parallel_map(run, range(len(sizes)))
    if not parts:
        return DdmBatch(np.zeros(0, dtype=bool), np.zeros(0))
    upper = np.concatenate([o.upper for o in parts])
    rt = np.concatenate([o.decision_ms for o in parts]) + p.nondecision_ms
    return DdmBatch(upper, rt)


# ---------------------------------------------------------------------------
# coactivation


def coactivation_params(
    stream_1_drift: float,
    stream_2_drift: float,
    shared: DdmParams,
    stream_1_noise: Optional[float] = None,
    stream_2_noise: Optional[float] = None,
) -> DdmParams:
    """Single accumulator equivalent to summing two independent streams.

    Drifts add and variances add: ``c = hypot(c1, c2)``. Each stream's noise
    defaults to ``shared.noise_c``; pass 0 for a noiseless stream. The
    summed evidence is compared against the shared threshold.
    """
    c1 = shared.noise_c if stream_1_noise is None else stream_1_noise
    c2 = shared.noise_c if stream_2_noise is None else stream_2_noise
    if c1 < 0 or c2 < 0:
        raise InvalidParameterError("stream noise must be >= 0")
    return DdmParams(
        drift_A=stream_1_drift + stream_2_drift,
        noise_c=math.hypot(c1, c2),
        threshold_z=shared.threshold_z,
        nondecision_ms=shared.nondecision_ms,
        start_x0=shared.start_x0,
    )


def coactivation_simulate(
    stream_1_drift: float,
    stream_2_drift: float,
    shared: DdmParams,
    dt_ms: float,
    rng: RngStream,
    stream_1_noise: Optional[float] = None,
    stream_2_noise: Optional[float] = None,
) -> tuple[Choice, float]:
    params = coactivation_params(stream_1_drift, stream_2_drift, shared, stream_1_noise, stream_2_noise)
    return ddm_simulate(params, dt_ms, rng)

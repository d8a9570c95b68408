"""Observer models: how each model family turns a trial into a response.

Every observer exposes ``simulate(spec, rng)`` returning ``(response, rt_ms)``
and ``response_probabilities(spec)`` giving the predicted response
distribution used for likelihood fitting. Random draws are consumed in a
fixed order per task, whatever the stimulus configuration, so runs with
matched seeds are directly comparable across conditions.
"""

from __future__ import annotations

import dataclasses
import functools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import ClassVar, Optional

import numpy as np
from scipy.special import expit, ndtr

from ..core import (
    ConfigurationError,
    GaussianEstimate,
    InvalidParameterError,
    Modality,
    RngStream,
    StimulusEvent,
    check_positive,
    substream,
)
from ..dynamic import (
    DynamicDdmParams,
    SensitivityProfile,
    combined_sensitivity,
    dynamic_ddm_simulate,
    dynamic_ddm_simulate_batch,
)
from ..fusion import (
    CountPrior,
    Readout,
    combine_gaussian,
    count_posterior,
    localize_with_causal_inference,
    visual_count_report_distribution,
)
from ..twin import TwinParams, integration_probability, twin_trial
from .trials import NO_MOTION, NOT_SIMULTANEOUS, SIMULTANEOUS, Response, Task, TrialSpec

# calibrated so perceived SOA 333 ms -> 0.9 motion, 500 -> 0.5, 666 -> ~0.1
MOTION_MIDPOINT_MS = 500.0
MOTION_SLOPE_PER_MS = math.log(9.0) / 167.0

_HERMITE_X, _HERMITE_W = np.polynomial.hermite_e.hermegauss(64)
_HERMITE_W = _HERMITE_W / _HERMITE_W.sum()


def _side(event: StimulusEvent) -> str:
    if event.location_deg is None or event.location_deg == 0:
        raise ConfigurationError("visual events in order tasks need a left or right location")
    return "L" if event.location_deg < 0 else "R"


class ObserverModel:
    """Base class; subclasses are frozen dataclasses."""

    name: ClassVar[str] = "observer"
    tasks: ClassVar[frozenset] = frozenset()

    def check(self, spec: TrialSpec) -> None:
        if spec.task not in self.tasks:
            raise ConfigurationError(f"{self.name} observer cannot perform task {spec.task.value!r}")

    def simulate(self, spec: TrialSpec, rng: RngStream) -> tuple[Response, Optional[float]]:
        raise NotImplementedError

    def response_probabilities(self, spec: TrialSpec) -> dict:
        raise NotImplementedError

    def params(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, (int, float, str, bool)) or value is None:
                out[f.name] = value.value if hasattr(value, "value") else value
        return out


def _mc_probabilities(observer: ObserverModel, spec: TrialSpec, n_inner: int, inner_seed: int) -> dict:
    # common random numbers: the same inner stream for every evaluation
    rng = substream(inner_seed, 0)
    counts = Counter(observer.simulate(spec, rng)[0] for _ in range(n_inner))
    return {k: v / n_inner for k, v in counts.items()}


# ---------------------------------------------------------------------------
# counting observers


def _relevant_beeps(spec: TrialSpec, window_ms: float) -> list[StimulusEvent]:
    flashes = spec.events(Modality.VISUAL)
    return [
        b
        for b in spec.events(Modality.AUDITORY)
        if any(abs(b.onset_ms - f.onset_ms) <= window_ms for f in flashes)
    ]


def _count_inputs(spec: TrialSpec, window_ms: float) -> tuple[Optional[int], int, bool]:
    """(auditory count or None, visual count, tones featurally identical)."""
    beeps = _relevant_beeps(spec, window_ms)
    n_a = sum(b.count for b in beeps) if beeps else None
    identical = len({b.feature_tag for b in beeps}) <= 1
    return n_a, spec.total_count(Modality.VISUAL), identical


@functools.lru_cache(maxsize=64)
def _coupled(max_count: int, kappa: float) -> CountPrior:
    return CountPrior.coupled(max_count, kappa)


def _rounded_count_probabilities(mean: float, sd: float, max_count: int) -> np.ndarray:
    edges = np.arange(max_count) + 0.5
    cdf = np.concatenate([[0.0], ndtr((edges - mean) / sd), [1.0]])
    return np.diff(cdf)


def _rounded(obs: float, max_count: int) -> int:
    return int(min(max(round(obs), 0), max_count))


@dataclass(frozen=True)
class CausalInferenceObserver(ObserverModel):
    """Ideal observer for counts, locations and sound-induced visual motion.

    Counting: noisy counts ``a ~ N(n_beeps, sigma_a)``, ``v ~ N(n_flashes,
    sigma_v)`` combined with a coupling prior (strength ``kappa``); the report
    is the posterior mode of the visual count. Beeps further than
    ``coupling_window_ms`` from every flash are ignored, and with
    ``featural_gating`` featurally distinct beeps drop the coupling to 1.

    Space: ``loc_sigma_*`` are localisation noise in degrees and the
    estimates come from :func:`localize_with_causal_inference`.
    """

    sigma_a: float = 0.3
    sigma_v: float = 1.0
    kappa: float = 4.0
    max_count: int = 4
    coupling_window_ms: float = 100.0
    featural_gating: bool = True
    loc_sigma_a: float = 8.0
    loc_sigma_v: float = 2.0
    sigma_prior: float = 20.0
    p_common: float = 0.5
    readout: Readout = Readout.MODEL_AVERAGING
    motion_threshold_deg: float = 2.0
    n_inner: int = 4000
    inner_seed: int = 0

    name: ClassVar[str] = "causal-inference"
    tasks: ClassVar[frozenset] = frozenset({Task.COUNT_REPORT, Task.LOCALIZATION, Task.MOTION_DIRECTION})

    def __post_init__(self):
        for name in ("sigma_a", "sigma_v", "loc_sigma_a", "loc_sigma_v", "sigma_prior"):
            check_positive(name, getattr(self, name))
        if self.kappa < 1:
            raise InvalidParameterError("kappa must be >= 1")
        if not 0 <= self.p_common <= 1:
            raise InvalidParameterError("p_common must be in [0, 1]")
        object.__setattr__(self, "readout", Readout(self.readout))

    def prior_for(self, identical_tones: bool) -> CountPrior:
        kappa = self.kappa if (identical_tones or not self.featural_gating) else 1.0
        return _coupled(self.max_count, float(kappa))

    # counting
    def _count_response(self, spec: TrialSpec, eps: np.ndarray) -> int:
        n_a, n_v, identical = _count_inputs(spec, self.coupling_window_ms)
        a_obs = None if n_a is None else n_a + self.sigma_a * eps[0]
        v_obs = n_v + self.sigma_v * eps[1]
        post = count_posterior(a_obs, v_obs, self.sigma_a, self.sigma_v, self.prior_for(identical))
        return post.mode_v

    def _count_probabilities(self, spec: TrialSpec) -> dict:
        n_a, n_v, identical = _count_inputs(spec, self.coupling_window_ms)
        probs = visual_count_report_distribution(
            n_a, n_v, self.sigma_a, self.sigma_v, self.prior_for(identical)
        )
        return {j: float(p) for j, p in enumerate(probs)}

    # space
    def _prior(self) -> GaussianEstimate:
        return GaussianEstimate(0.0, self.sigma_prior)

    def _visual_estimate(self, x_v: float, x_a: Optional[float]) -> float:
        if x_a is None:
            return combine_gaussian(GaussianEstimate(x_v, self.loc_sigma_v), self._prior()).combined.mean
        return localize_with_causal_inference(
            x_a, x_v, self.loc_sigma_a, self.loc_sigma_v, self.sigma_prior, self.p_common, self.readout
        )[1]

    def _localization_response(self, spec: TrialSpec, eps: np.ndarray) -> float:
        audio = [e for e in spec.events(Modality.AUDITORY) if e.location_deg is not None]
        if not audio:
            raise ConfigurationError("localization needs a located auditory event")
        visual = [e for e in spec.events(Modality.VISUAL) if e.location_deg is not None]
        x_a = audio[0].location_deg + self.loc_sigma_a * eps[0]
        if not visual:
            return combine_gaussian(GaussianEstimate(x_a, self.loc_sigma_a), self._prior()).combined.mean
        x_v = visual[0].location_deg + self.loc_sigma_v * eps[1]
        return localize_with_causal_inference(
            x_a, x_v, self.loc_sigma_a, self.loc_sigma_v, self.sigma_prior, self.p_common, self.readout
        )[0]

    def _motion_response(self, spec: TrialSpec, eps: np.ndarray) -> str:
        flashes = sorted(spec.events(Modality.VISUAL), key=lambda e: e.onset_ms)
        if len(flashes) != 2 or any(f.location_deg is None for f in flashes):
            raise ConfigurationError("spatial motion needs two located flashes")
        tones = [t for t in spec.events(Modality.AUDITORY) if t.location_deg is not None]
        estimates = []
        for k, flash in enumerate(flashes):
            x_v = flash.location_deg + self.loc_sigma_v * eps[k]
            paired = [t for t in tones if abs(t.onset_ms - flash.onset_ms) <= self.coupling_window_ms]
            x_a = None
            if paired:
                tone = min(paired, key=lambda t: abs(t.onset_ms - flash.onset_ms))
                x_a = tone.location_deg + self.loc_sigma_a * eps[2 + k]
            estimates.append(self._visual_estimate(x_v, x_a))
        shift = estimates[1] - estimates[0]
        if shift > self.motion_threshold_deg:
            return "R"
        if shift < -self.motion_threshold_deg:
            return "L"
        return NO_MOTION

    def simulate(self, spec, rng):
        self.check(spec)
        if spec.task is Task.COUNT_REPORT:
            return self._count_response(spec, rng.gen.standard_normal(2)), None
        if spec.task is Task.LOCALIZATION:
            return float(self._localization_response(spec, rng.gen.standard_normal(2))), None
        return self._motion_response(spec, rng.gen.standard_normal(4)), None

    def response_probabilities(self, spec):
        self.check(spec)
        if spec.task is Task.COUNT_REPORT:
            return self._count_probabilities(spec)
        if spec.task is Task.MOTION_DIRECTION:
            return _mc_probabilities(self, spec, self.n_inner, self.inner_seed)
        raise ConfigurationError("continuous localization responses have no categorical likelihood")


@dataclass(frozen=True)
class FocalSwitchingObserver(ObserverModel):
    """Reports the count from one modality, chosen at random each trial.

    The auditory channel is picked with probability ``p_audio`` regardless
    of reliability. With no sound the visual count is reported.
    """

    sigma_a: float = 0.3
    sigma_v: float = 1.0
    p_audio: float = 0.5
    max_count: int = 4
    coupling_window_ms: float = 100.0

    name: ClassVar[str] = "focal-switching"
    tasks: ClassVar[frozenset] = frozenset({Task.COUNT_REPORT})

    def __post_init__(self):
        check_positive("sigma_a", self.sigma_a)
        check_positive("sigma_v", self.sigma_v)
        if not 0 <= self.p_audio <= 1:
            raise InvalidParameterError("p_audio must be in [0, 1]")

    def audio_probability(self) -> float:
        return self.p_audio

    def simulate(self, spec, rng):
        self.check(spec)
        eps = rng.gen.standard_normal(2)
        u = rng.gen.random()
        n_a, n_v, _ = _count_inputs(spec, self.coupling_window_ms)
        if n_a is not None and u < self.audio_probability():
            return _rounded(n_a + self.sigma_a * eps[0], self.max_count), None
        return _rounded(n_v + self.sigma_v * eps[1], self.max_count), None

    def response_probabilities(self, spec):
        self.check(spec)
        n_a, n_v, _ = _count_inputs(spec, self.coupling_window_ms)
        probs = _rounded_count_probabilities(n_v, self.sigma_v, self.max_count)
        if n_a is not None:
            p = self.audio_probability()
            probs = p * _rounded_count_probabilities(n_a, self.sigma_a, self.max_count) + (1 - p) * probs
        return {j: float(q) for j, q in enumerate(probs)}


@dataclass(frozen=True)
class ModalitySwitchingObserver(FocalSwitchingObserver):
    """Switching observer whose modality choice follows relative reliability."""

    name: ClassVar[str] = "modality-switching"

    def audio_probability(self) -> float:
        ra, rv = self.sigma_a**-2, self.sigma_v**-2
        return ra / (ra + rv)


# ---------------------------------------------------------------------------
# temporal capture


@dataclass(frozen=True)
class TemporalCaptureObserver(ObserverModel):
    """Temporal ventriloquism as reliability-weighted averaging in time.

    Each tone, in onset order, captures the nearest not-yet-captured light
    within ``coupling_window_ms``; a captured light's perceived onset is
    ``(1 - w) * t_light + w * t_tone``. With ``featural_gating`` a tone set
    with more than one feature tag captures nothing. Perceived onsets carry
    independent Gaussian noise ``sigma_ms``. ``prior_entry_ms`` advances the
    light on the cued side.
    """

    capture_weight: float = 0.5
    sigma_ms: float = 30.0
    coupling_window_ms: float = 200.0
    featural_gating: bool = True
    simultaneity_band_ms: float = 25.0
    simultaneity_inflation_ms: float = 0.0
    prior_entry_ms: float = 0.0
    motion_midpoint_ms: float = MOTION_MIDPOINT_MS
    motion_slope_per_ms: float = MOTION_SLOPE_PER_MS

    name: ClassVar[str] = "temporal-capture"
    tasks: ClassVar[frozenset] = frozenset({Task.TOJ, Task.TERNARY, Task.MOTION_DIRECTION})

    def __post_init__(self):
        if not 0 <= self.capture_weight <= 1:
            raise InvalidParameterError("capture_weight must be in [0, 1]")
        check_positive("sigma_ms", self.sigma_ms)
        if self.coupling_window_ms < 0 or self.simultaneity_band_ms < 0:
            raise InvalidParameterError("windows must be >= 0")
        if self.simultaneity_inflation_ms < 0:
            raise InvalidParameterError("simultaneity_inflation_ms must be >= 0")

    def perceived_onsets(self, spec: TrialSpec) -> list[tuple[StimulusEvent, float]]:
        """Expected perceived onset of every light, in listing order."""
        lights = spec.events(Modality.VISUAL)
        tones = sorted(spec.events(Modality.AUDITORY), key=lambda e: e.onset_ms)
        means = [e.onset_ms for e in lights]
        gate_open = not (self.featural_gating and len({t.feature_tag for t in tones}) > 1)
        if gate_open and self.capture_weight > 0:
            free = set(range(len(lights)))
            for tone in tones:
                near = [
                    (abs(lights[i].onset_ms - tone.onset_ms), i)
                    for i in sorted(free)
                    if abs(lights[i].onset_ms - tone.onset_ms) <= self.coupling_window_ms
                ]
                if not near:
                    continue
                _, i = min(near)
                free.discard(i)
                w = self.capture_weight
                means[i] = (1.0 - w) * lights[i].onset_ms + w * tone.onset_ms
        if spec.cued_side is not None and self.prior_entry_ms:
            for i, light in enumerate(lights):
                if light.location_deg is not None and _side(light) == spec.cued_side.value:
                    means[i] -= self.prior_entry_ms
        return list(zip(lights, means))

    def _pair(self, spec: TrialSpec) -> tuple[float, float]:
        """Mean perceived onsets of (left, right) lights."""
        onsets = self.perceived_onsets(spec)
        if len(onsets) != 2:
            raise ConfigurationError("order tasks need exactly two lights")
        by_side = {_side(e): m for e, m in onsets}
        if set(by_side) != {"L", "R"}:
            raise ConfigurationError("order tasks need one left and one right light")
        return by_side["L"], by_side["R"]

    def _band(self, spec: TrialSpec) -> float:
        single = len(spec.events(Modality.AUDITORY)) == 1
        return self.simultaneity_band_ms + (self.simultaneity_inflation_ms if single else 0.0)

    def effective_soa(self, spec: TrialSpec) -> float:
        """Mean perceived right-minus-left onset difference."""
        left, right = self._pair(spec)
        return right - left

    def _motion_soa(self, spec: TrialSpec) -> tuple[float, str]:
        onsets = sorted(self.perceived_onsets(spec), key=lambda em: em[0].onset_ms)
        if len(onsets) != 2:
            raise ConfigurationError("apparent motion needs exactly two lights")
        (first, m1), (second, m2) = onsets
        return m2 - m1, _side(second)

    def simulate(self, spec, rng):
        self.check(spec)
        eps = rng.gen.standard_normal(2)
        if spec.task is Task.MOTION_DIRECTION:
            u = rng.gen.random()
            soa, towards = self._motion_soa(spec)
            perceived = soa + self.sigma_ms * (eps[1] - eps[0])
            p_motion = expit(-self.motion_slope_per_ms * (perceived - self.motion_midpoint_ms))
            return (towards if u < p_motion else NO_MOTION), None
        left, right = self._pair(spec)
        delta = (right + self.sigma_ms * eps[1]) - (left + self.sigma_ms * eps[0])
        if spec.task is Task.TERNARY and abs(delta) < self._band(spec):
            return SIMULTANEOUS, None
        return ("L" if delta > 0 else "R"), None

    def response_probabilities(self, spec):
        self.check(spec)
        s = self.sigma_ms * math.sqrt(2.0)
        if spec.task is Task.MOTION_DIRECTION:
            soa, towards = self._motion_soa(spec)
            perceived = soa + s * _HERMITE_X
            p = float(np.dot(_HERMITE_W, expit(-self.motion_slope_per_ms * (perceived - self.motion_midpoint_ms))))
            return {towards: p, NO_MOTION: 1.0 - p}
        m = self.effective_soa(spec)
        if spec.task is Task.TOJ:
            p_left = float(ndtr(m / s))
            return {"L": p_left, "R": 1.0 - p_left}
        b = self._band(spec)
        hi, lo = float(ndtr((b - m) / s)), float(ndtr((-b - m) / s))
        return {"L": 1.0 - hi, "R": lo, SIMULTANEOUS: hi - lo}


# ---------------------------------------------------------------------------
# TWIN and dynamic DDM


@dataclass(frozen=True)
class TwinObserver(ObserverModel):
    """Simultaneity judgements: "simultaneous" iff the second stage integrates."""

    twin: TwinParams = field(default_factory=lambda: TwinParams(0.02, 0.01, 200.0))

    name: ClassVar[str] = "twin"
    tasks: ClassVar[frozenset] = frozenset({Task.SIMULTANEITY})

    def _pair(self, spec):
        a, v = spec.events(Modality.AUDITORY), spec.events(Modality.VISUAL)
        if len(a) != 1 or len(v) != 1:
            raise ConfigurationError("TWIN trials need one tone and one light")
        return a[0], v[0]

    def simulate(self, spec, rng):
        self.check(spec)
        a, v = self._pair(spec)
        out = twin_trial(a, v, self.twin, rng)
        return (SIMULTANEOUS if out.integrated else NOT_SIMULTANEOUS), out.rt_ms

    def response_probabilities(self, spec):
        self.check(spec)
        a, v = self._pair(spec)
        p = integration_probability(self.twin, a.onset_ms, v.onset_ms)
        return {SIMULTANEOUS: p, NOT_SIMULTANEOUS: 1.0 - p}

    def params(self):
        return dataclasses.asdict(self.twin)


@dataclass(frozen=True)
class DynamicDdmObserver(ObserverModel):
    """Heading discrimination with a time-varying combined drift.

    Missing modalities contribute a zero profile. Response probabilities come
    from ``n_inner`` simulated trials with a fixed ``inner_seed``.
    """

    ddm: DynamicDdmParams
    visual_profile: SensitivityProfile
    vestibular_profile: SensitivityProfile
    dt_ms: float = 1.0
    n_inner: int = 2000
    inner_seed: int = 0

    name: ClassVar[str] = "dynamic-ddm"
    tasks: ClassVar[frozenset] = frozenset({Task.HEADING})

    def _drive(self, spec: TrialSpec):
        if spec.correct_answer not in ("L", "R"):
            raise ConfigurationError("heading trials need an L/R answer")
        sign = 1 if spec.correct_answer == "R" else -1
        zero = self.visual_profile.scaled(0.0)
        v = self.visual_profile if spec.events(Modality.VISUAL) else zero
        a = self.vestibular_profile if spec.events(Modality.VESTIBULAR) else zero
        params = dataclasses.replace(self.ddm, heading_sign=sign)
        return combined_sensitivity(v, a, params), params

    def simulate(self, spec, rng):
        self.check(spec)
        d, params = self._drive(spec)
        choice, rt = dynamic_ddm_simulate(d, params, self.dt_ms, rng)
        return ("R" if choice.value == "upper" else "L"), rt

    def response_probabilities(self, spec):
        self.check(spec)
        d, params = self._drive(spec)
        batch = dynamic_ddm_simulate_batch(d, params, self.n_inner, self.inner_seed, self.dt_ms)
        p_right = float(batch.upper.mean())
        return {"R": p_right, "L": 1.0 - p_right}

    def params(self):
        return dataclasses.asdict(self.ddm)

"""Name-based construction of observers and paradigms for the command line."""

from __future__ import annotations

import dataclasses
import itertools
from typing import Any, Callable

from ..core import ConfigurationError, PerceptFusionError
from ..dynamic import DynamicDdmParams, gaussian_acceleration_profile, gaussian_velocity_profile
from ..fit import ParamSpace
from ..paradigms import (
    CausalInferenceObserver,
    DynamicDdmObserver,
    FocalSwitchingObserver,
    Inside,
    ModalitySwitchingObserver,
    NoTones,
    ObserverModel,
    Outside,
    SingleBefore,
    TemporalCaptureObserver,
    TrialSpec,
    TwinObserver,
    make_apparent_motion_trial,
    make_flash_beep_trial,
    make_heading_trial,
    make_simultaneity_trial,
    make_sound_induced_motion_trial,
    make_toj_trial,
    make_ventriloquist_trial,
)
from ..twin import TwinParams

TWIN_DEFAULTS = {"rate_a": 0.02, "rate_v": 0.01, "base_window_ms": 200.0}
DYNAMIC_DEFAULTS = {"k_vis": 0.002, "k_vest": 0.002, "noise_c": 0.05, "threshold_z": 1.0}
PROFILE_DEFAULTS = {"profile_duration_ms": 2000.0, "profile_sigma_ms": 250.0}


def parse_value(text: str) -> Any:
    """Best-effort scalar parsing for ``key=value`` arguments."""
    low = text.strip().lower()
    if low in ("none", "null", ""):
        return None
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _field_names(cls) -> list[str]:
    return [f.name for f in dataclasses.fields(cls)]


def _plain(cls, params: dict) -> ObserverModel:
    return cls(**params)


def _twin(params: dict) -> ObserverModel:
    return TwinObserver(TwinParams(**{**TWIN_DEFAULTS, **params}))


_DYNAMIC_OWN = ("dt_ms", "n_inner", "inner_seed")


def _dynamic(params: dict) -> ObserverModel:
    params = {**DYNAMIC_DEFAULTS, **PROFILE_DEFAULTS, **params}
    duration = params.pop("profile_duration_ms")
    sigma = params.pop("profile_sigma_ms")
    own = {k: params.pop(k) for k in _DYNAMIC_OWN if k in params}
    return DynamicDdmObserver(
        DynamicDdmParams(**params),
        gaussian_velocity_profile(duration, sigma),
        gaussian_acceleration_profile(duration, sigma),
        **own,
    )


_OBSERVERS: dict[str, tuple[Callable[[dict], ObserverModel], list[str]]] = {
    "causal-inference": (
        lambda p: _plain(CausalInferenceObserver, p),
        _field_names(CausalInferenceObserver),
    ),
    "temporal-capture": (
        lambda p: _plain(TemporalCaptureObserver, p),
        _field_names(TemporalCaptureObserver),
    ),
    "focal-switching": (lambda p: _plain(FocalSwitchingObserver, p), _field_names(FocalSwitchingObserver)),
    "modality-switching": (
        lambda p: _plain(ModalitySwitchingObserver, p),
        _field_names(ModalitySwitchingObserver),
    ),
    "twin": (_twin, _field_names(TwinParams)),
    "dynamic-ddm": (
        _dynamic,
        _field_names(DynamicDdmParams) + list(PROFILE_DEFAULTS) + list(_DYNAMIC_OWN),
    ),
}

DEFAULT_SPACES = {
    "causal-inference": ParamSpace(("sigma_a", "sigma_v", "kappa"), (0.05, 0.05, 1.0), (5.0, 5.0, 100.0), ("log",) * 3),
    "temporal-capture": ParamSpace(("capture_weight", "sigma_ms"), (0.0, 1.0), (1.0, 300.0), ("identity", "log")),
    "focal-switching": ParamSpace(
        ("sigma_a", "sigma_v", "p_audio"), (0.05, 0.05, 0.0), (5.0, 5.0, 1.0), ("log", "log", "identity")
    ),
    "modality-switching": ParamSpace(("sigma_a", "sigma_v"), (0.05, 0.05), (5.0, 5.0), ("log", "log")),
    "twin": ParamSpace(("rate_a", "rate_v", "base_window_ms"), (1e-3, 1e-3, 1.0), (1.0, 1.0, 1000.0), ("log",) * 3),
    "dynamic-ddm": ParamSpace(("k_vis", "k_vest"), (1e-4, 1e-4), (0.1, 0.1), ("log", "log")),
}


def observer_names() -> list[str]:
    return sorted(_OBSERVERS)


def observer_params(name: str) -> list[str]:
    if name not in _OBSERVERS:
        raise ConfigurationError(f"unknown observer {name!r}; choose from {', '.join(observer_names())}")
    return _OBSERVERS[name][1]


def make_observer(name: str, params: dict) -> ObserverModel:
    known = observer_params(name)
    unknown = sorted(set(params) - set(known))
    if unknown:
        raise ConfigurationError(f"observer {name!r} has no parameter(s) {', '.join(unknown)}")
    try:
        return _OBSERVERS[name][0](dict(params))
    except TypeError as exc:
        raise ConfigurationError(f"observer {name!r}: {exc}") from None


def observer_family(name: str, base: dict) -> Callable[[dict], ObserverModel]:
    """Factory for fitting: free parameters on top of fixed ``base`` values."""
    observer_params(name)
    return lambda free: make_observer(name, {**base, **free})


# ---------------------------------------------------------------------------
# paradigms


def _toj(first="L", v_soa_ms=40.0, tones="none", lead_ms=75.0, lag_ms=75.0, offset_ms=10.0,
         ternary=False, cued_side=None):
    configs = {
        "none": NoTones(),
        "outside": Outside(lead_ms, lag_ms),
        "inside": Inside(offset_ms),
        "single": SingleBefore(lead_ms),
    }
    tones = "none" if tones is None else tones  # parse_value maps "none" to None
    if tones not in configs:
        raise ConfigurationError(f"tones must be one of {', '.join(configs)}")
    return make_toj_trial(first, v_soa_ms, configs[tones], ternary=bool(ternary), cued_side=cued_side)


PARADIGMS: dict[str, Callable[..., TrialSpec]] = {
    "flash-beep": make_flash_beep_trial,
    "ventriloquist": make_ventriloquist_trial,
    "toj": _toj,
    "apparent-motion": make_apparent_motion_trial,
    "sound-induced-motion": make_sound_induced_motion_trial,
    "simultaneity": make_simultaneity_trial,
    "heading": make_heading_trial,
}


def make_specs(paradigm: str, args: dict) -> list[TrialSpec]:
    """One spec per combination of list-valued arguments (Cartesian product)."""
    if paradigm not in PARADIGMS:
        raise ConfigurationError(f"unknown paradigm {paradigm!r}; choose from {', '.join(sorted(PARADIGMS))}")
    keys = list(args)
    values = [v if isinstance(v, list) else [v] for v in args.values()]
    specs = []
    for combo in itertools.product(*values):
        try:
            specs.append(PARADIGMS[paradigm](**dict(zip(keys, combo))))
        except TypeError as exc:
            raise ConfigurationError(f"paradigm {paradigm!r}: {exc}") from None
        except PerceptFusionError as exc:
            raise ConfigurationError(f"paradigm {paradigm!r}: {exc}") from None
    return specs

"""Trial specifications for the audio-visual paradigms.

Times are in ms relative to the first visual onset; locations in degrees of
azimuth (negative = left).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from ..core import InvalidParameterError, Modality, StimulusEvent

LEFT_DEG = -10.0
RIGHT_DEG = 10.0
DEFAULT_FLASH_MS = 17.0
DEFAULT_TONE_SOA_MS = 57.0

Response = Union[str, int, float]


class Task(str, enum.Enum):
    TOJ = "toj"
    TERNARY = "ternary"
    COUNT_REPORT = "count"
    LOCALIZATION = "localization"
    MOTION_DIRECTION = "motion"
    SIMULTANEITY = "simultaneity"
    HEADING = "heading"


class Side(str, enum.Enum):
    LEFT = "L"
    RIGHT = "R"

    @property
    def location(self) -> float:
        return LEFT_DEG if self is Side.LEFT else RIGHT_DEG

    @property
    def other(self) -> "Side":
        return Side.RIGHT if self is Side.LEFT else Side.LEFT


SIMULTANEOUS = "S"
NOT_SIMULTANEOUS = "N"
NO_MOTION = "none"


@dataclass(frozen=True)
class TrialSpec:
    stimuli: tuple[StimulusEvent, ...]
    task: Task
    correct_answer: Optional[Response] = None
    cued_side: Optional[Side] = None
    condition: str = ""

    def __post_init__(self):
        if not self.stimuli:
            raise InvalidParameterError("a trial needs at least one stimulus")
        object.__setattr__(self, "stimuli", tuple(self.stimuli))
        object.__setattr__(self, "task", Task(self.task))
        if self.cued_side is not None:
            object.__setattr__(self, "cued_side", Side(self.cued_side))

    def events(self, modality: Modality) -> list[StimulusEvent]:
        return [e for e in self.stimuli if e.modality is modality]

    def total_count(self, modality: Modality) -> int:
        return sum(e.count for e in self.events(modality))


def answer_space(task: Task, max_count: int = 4) -> Optional[frozenset]:
    """Allowed responses, or ``None`` for continuous responses."""
    task = Task(task)
    if task is Task.TOJ:
        return frozenset({"L", "R"})
    if task is Task.TERNARY:
        return frozenset({"L", "R", SIMULTANEOUS})
    if task is Task.COUNT_REPORT:
        return frozenset(range(max_count + 1))
    if task is Task.MOTION_DIRECTION:
        return frozenset({"L", "R", NO_MOTION})
    if task is Task.SIMULTANEITY:
        return frozenset({SIMULTANEOUS, NOT_SIMULTANEOUS})
    if task is Task.HEADING:
        return frozenset({"L", "R"})
    return None


def _tone(onset: float, tag: int = 0, location: Optional[float] = None) -> StimulusEvent:
    return StimulusEvent(Modality.AUDITORY, onset, location, tag, 1)


def _tone_tags(tags: Optional[Sequence[int]], n: int) -> list[int]:
    if tags is None:
        return [0] * n
    tags = list(tags)
    if len(tags) != n:
        raise InvalidParameterError(f"expected {n} tone tags, got {len(tags)}")
    return tags


def make_flash_beep_trial(
    n_flashes: int,
    n_beeps: int,
    flash_ms: float = DEFAULT_FLASH_MS,
    tone_soa_ms: float = DEFAULT_TONE_SOA_MS,
    flash_soa_ms: Optional[float] = None,
    tone_tags: Optional[Sequence[int]] = None,
) -> TrialSpec:
    """Flash/beep counting trial.

    Flashes start at 0 and repeat every ``flash_soa_ms`` (default: the tone
    SOA). Beeps are spaced ``tone_soa_ms`` apart and centred on the flash
    train, so with one flash and two beeps the first tone precedes the flash
    onset and the second follows it.
    """
    if n_flashes < 1 or n_beeps < 0:
        raise InvalidParameterError("need n_flashes >= 1 and n_beeps >= 0")
    if flash_ms < 0 or (n_beeps > 1 and not tone_soa_ms >= 0):
        raise InvalidParameterError("timings must be non-negative")
    flash_soa = tone_soa_ms if flash_soa_ms is None else flash_soa_ms
    if n_flashes > 1 and not flash_soa >= 0:
        raise InvalidParameterError("flash_soa_ms must be non-negative")
    flashes = [
        StimulusEvent(Modality.VISUAL, k * flash_soa, 0.0, 0, 1, duration_ms=flash_ms)
        for k in range(n_flashes)
    ]
    centre = 0.5 * ((n_flashes - 1) * flash_soa + flash_ms)
    tags = _tone_tags(tone_tags, n_beeps)
    beeps = [
        _tone(centre + (k - 0.5 * (n_beeps - 1)) * tone_soa_ms, tags[k]) for k in range(n_beeps)
    ]
    return TrialSpec(
        tuple(flashes + beeps), Task.COUNT_REPORT, n_flashes, condition=f"flash{n_flashes}_beep{n_beeps}"
    )


def make_ventriloquist_trial(audio_loc_deg: float, visual_loc_deg: Optional[float]) -> TrialSpec:
    """Localization trial; ``visual_loc_deg=None`` gives the auditory-only control."""
    stimuli = [StimulusEvent(Modality.AUDITORY, 0.0, audio_loc_deg)]
    if visual_loc_deg is not None:
        stimuli.append(StimulusEvent(Modality.VISUAL, 0.0, visual_loc_deg))
    cond = f"a{audio_loc_deg:g}_v{visual_loc_deg:g}" if visual_loc_deg is not None else f"a{audio_loc_deg:g}"
    return TrialSpec(tuple(stimuli), Task.LOCALIZATION, float(audio_loc_deg), condition=cond)


# ---------------------------------------------------------------------------
# temporal order judgements


@dataclass(frozen=True)
class NoTones:
    def tone_times(self, v_soa_ms: float) -> list[float]:
        return []


@dataclass(frozen=True)
class Outside:
    """First tone ``lead_ms`` before the first light, second ``lag_ms`` after the second."""

    lead_ms: float = 75.0
    lag_ms: float = 75.0

    def tone_times(self, v_soa_ms: float) -> list[float]:
        if self.lead_ms < 0 or self.lag_ms < 0:
            raise InvalidParameterError("lead/lag must be >= 0")
        return [-self.lead_ms, v_soa_ms + self.lag_ms]


@dataclass(frozen=True)
class Inside:
    """Tones ``offset_ms`` after the first light and before the second."""

    offset_ms: float

    def tone_times(self, v_soa_ms: float) -> list[float]:
        if not 0 <= self.offset_ms <= 0.5 * v_soa_ms:
            raise InvalidParameterError("inside offset must lie in [0, v_soa/2]")
        return [self.offset_ms, v_soa_ms - self.offset_ms]


@dataclass(frozen=True)
class SingleBefore:
    lead_ms: float = 100.0

    def tone_times(self, v_soa_ms: float) -> list[float]:
        if self.lead_ms < 0:
            raise InvalidParameterError("lead must be >= 0")
        return [-self.lead_ms]


ToneConfig = Union[NoTones, Outside, Inside, SingleBefore]


def make_toj_trial(
    first: Union[Side, str],
    v_soa_ms: float,
    tone_config: Optional[ToneConfig] = None,
    tone_tags: Optional[Sequence[int]] = None,
    ternary: bool = False,
    cued_side: Optional[Union[Side, str]] = None,
    tone_location_deg: Optional[float] = None,
) -> TrialSpec:
    """Two lights ``v_soa_ms`` apart, optionally flanked by tones.

    ``tone_location_deg=None`` places the tones in neutral space. With
    ``ternary=True`` a simultaneity response is allowed and the correct
    answer at zero SOA is ``"S"``.
    """
    first = Side(first)
    if not v_soa_ms >= 0:
        raise InvalidParameterError("v_soa_ms must be >= 0")
    tone_config = tone_config or NoTones()
    visual = [
        StimulusEvent(Modality.VISUAL, 0.0, first.location),
        StimulusEvent(Modality.VISUAL, float(v_soa_ms), first.other.location),
    ]
    times = tone_config.tone_times(v_soa_ms)
    tags = _tone_tags(tone_tags, len(times))
    tones = [_tone(t, g, tone_location_deg) for t, g in zip(times, tags)]
    task = Task.TERNARY if ternary else Task.TOJ
    answer = SIMULTANEOUS if (ternary and v_soa_ms == 0) else first.value
    name = type(tone_config).__name__.lower()
    return TrialSpec(
        tuple(visual + tones), task, answer, cued_side, condition=f"{name}_soa{v_soa_ms:g}_{first.value}"
    )


def make_apparent_motion_trial(
    v_soa_ms: float,
    a_soa_ms: Optional[float] = None,
    first: Union[Side, str] = Side.LEFT,
    tone_tags: Optional[Sequence[int]] = None,
) -> TrialSpec:
    """Two alternating lights with an optional tone pair centred on them.

    Motion, when seen, goes towards the second light, so a motion report is
    the second light's side.
    """
    first = Side(first)
    if not v_soa_ms >= 0 or (a_soa_ms is not None and not a_soa_ms >= 0):
        raise InvalidParameterError("SOAs must be >= 0")
    stimuli = [
        StimulusEvent(Modality.VISUAL, 0.0, first.location),
        StimulusEvent(Modality.VISUAL, float(v_soa_ms), first.other.location),
    ]
    if a_soa_ms is not None:
        centre = 0.5 * v_soa_ms
        tags = _tone_tags(tone_tags, 2)
        stimuli += [_tone(centre - 0.5 * a_soa_ms, tags[0]), _tone(centre + 0.5 * a_soa_ms, tags[1])]
    cond = f"vsoa{v_soa_ms:g}" + ("" if a_soa_ms is None else f"_asoa{a_soa_ms:g}")
    return TrialSpec(tuple(stimuli), Task.MOTION_DIRECTION, None, condition=cond)


def make_sound_induced_motion_trial(
    flash_loc_deg: float = 10.0,
    pan_deg: float = 10.0,
    soa_ms: float = 200.0,
    direction: Union[Side, str, None] = Side.RIGHT,
) -> TrialSpec:
    """A static flash shown twice while a sound pans across it.

    ``direction=None`` drops the sound (visual-only control). The correct
    answer is no motion: the flash never moves.
    """
    stimuli = [
        StimulusEvent(Modality.VISUAL, 0.0, flash_loc_deg),
        StimulusEvent(Modality.VISUAL, float(soa_ms), flash_loc_deg),
    ]
    cond = "static"
    if direction is not None:
        sign = 1.0 if Side(direction) is Side.RIGHT else -1.0
        stimuli += [
            _tone(0.0, 0, flash_loc_deg - sign * pan_deg),
            _tone(float(soa_ms), 0, flash_loc_deg + sign * pan_deg),
        ]
        cond = f"pan_{Side(direction).value}"
    return TrialSpec(tuple(stimuli), Task.MOTION_DIRECTION, NO_MOTION, condition=cond)


def make_simultaneity_trial(soa_ms: float) -> TrialSpec:
    """Tone at 0 and a light at ``soa_ms`` (negative = light first)."""
    stimuli = (
        StimulusEvent(Modality.AUDITORY, 0.0),
        StimulusEvent(Modality.VISUAL, float(soa_ms), 0.0),
    )
    answer = SIMULTANEOUS if soa_ms == 0 else NOT_SIMULTANEOUS
    return TrialSpec(stimuli, Task.SIMULTANEITY, answer, condition=f"sj_soa{soa_ms:g}")


def make_heading_trial(heading_sign: int, visual: bool = True, vestibular: bool = True) -> TrialSpec:
    if heading_sign not in (1, -1):
        raise InvalidParameterError("heading_sign must be +1 or -1")
    if not (visual or vestibular):
        raise InvalidParameterError("need at least one modality")
    loc = RIGHT_DEG if heading_sign > 0 else LEFT_DEG
    stimuli = []
    if visual:
        stimuli.append(StimulusEvent(Modality.VISUAL, 0.0, loc))
    if vestibular:
        stimuli.append(StimulusEvent(Modality.VESTIBULAR, 0.0, loc))
    answer = "R" if heading_sign > 0 else "L"
    cond = {(True, True): "combined", (True, False): "visual", (False, True): "vestibular"}[
        (visual, vestibular)
    ]
    return TrialSpec(tuple(stimuli), Task.HEADING, answer, condition=f"{cond}_{answer}")

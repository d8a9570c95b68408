"""Experimental paradigms, observer models and trial records."""

from .observers import (
    CausalInferenceObserver,
    DynamicDdmObserver,
    FocalSwitchingObserver,
    ModalitySwitchingObserver,
    ObserverModel,
    TemporalCaptureObserver,
    TwinObserver,
)
from .records import (
    TrialRecord,
    records_from_csv,
    records_from_json,
    records_to_csv,
    records_to_json,
    run_block,
)
from .trials import (
    NO_MOTION,
    NOT_SIMULTANEOUS,
    SIMULTANEOUS,
    Inside,
    NoTones,
    Outside,
    Side,
    SingleBefore,
    Task,
    TrialSpec,
    answer_space,
    make_apparent_motion_trial,
    make_flash_beep_trial,
    make_heading_trial,
    make_simultaneity_trial,
    make_sound_induced_motion_trial,
    make_toj_trial,
    make_ventriloquist_trial,
)

__all__ = [name for name in dir() if not name.startswith("_")]

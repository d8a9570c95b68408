"""Shared domain types, density kernels and seeded random streams."""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, TypeVar

import numpy as np

_MASK64 = (1 << 64) - 1
THREADS_ENV = "PERCEPT_FUSION_THREADS"

T = TypeVar("T")
R = TypeVar("R")


class PerceptFusionError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(PerceptFusionError, ValueError):
    pass


class DegeneratePriorError(PerceptFusionError, ValueError):
    pass


class SimulationTimeoutError(PerceptFusionError, RuntimeError):
    pass


class ConfigurationError(PerceptFusionError, ValueError):
    """Observer and task (or CLI configuration) do not fit together."""


class DataError(PerceptFusionError, ValueError):
    pass


class FitFailureError(PerceptFusionError, RuntimeError):
    pass


class Modality(str, enum.Enum):
    AUDITORY = "A"
    VISUAL = "V"
    TACTILE = "T"
    VESTIBULAR = "S"


@dataclass(frozen=True)
class StimulusEvent:
    """One physical stimulus.

    ``location_deg`` is ``None`` for spatially neutral stimuli (e.g. a tone
    from a central speaker). Events with equal ``feature_tag`` are treated as
    featurally identical when gating the unity assumption.
    """

    modality: Modality
    onset_ms: float
    location_deg: Optional[float] = None
    feature_tag: int = 0
    count: int = 1
    duration_ms: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.onset_ms):
            raise InvalidParameterError(f"onset_ms must be finite, got {self.onset_ms}")
        if self.count < 0:
            raise InvalidParameterError(f"count must be >= 0, got {self.count}")
        if not self.duration_ms >= 0:
            raise InvalidParameterError(f"duration_ms must be >= 0, got {self.duration_ms}")
        if not isinstance(self.modality, Modality):
            object.__setattr__(self, "modality", Modality(self.modality))


@dataclass(frozen=True)
class GaussianEstimate:
    """Mean and standard deviation of a unimodal internal measurement.

    ``sd`` may be ``inf`` to represent an uninformative cue.
    """

    mean: float
    sd: float

    def __post_init__(self):
        if not self.sd > 0:
            raise InvalidParameterError(f"sd must be > 0, got {self.sd}")

    @property
    def variance(self) -> float:
        return self.sd * self.sd


def check_positive(name: str, value: float) -> None:
    if not value > 0:
        raise InvalidParameterError(f"{name} must be > 0, got {value}")


def normal_pdf(x, mean, sd):
    """Gaussian density; works elementwise on arrays."""
    if np.any(np.asarray(sd) <= 0):
        raise InvalidParameterError(f"sd must be > 0, got {sd}")
    z = (np.asarray(x, dtype=float) - mean) / sd
    out = np.exp(-0.5 * z * z) / (sd * math.sqrt(2.0 * math.pi))
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class RngStream:
    """A single-owner random stream keyed by ``(master_seed, stream_index)``.

    Backed by the Philox counter-based generator: the 128-bit key is the pair
    of 64-bit words ``(master_seed, stream_index)``, so every stream is fixed
    by its key alone and no stream depends on how many others exist.
    """

    master_seed: int
    stream_index: int
    gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.stream_index < 0:
            raise InvalidParameterError("stream_index must be non-negative")
        if self.stream_index > _MASK64:
            raise InvalidParameterError("stream_index must fit in 64 bits")
        key = [self.master_seed & _MASK64, self.stream_index]
        self.gen = np.random.Generator(np.random.Philox(key=key))

    @property
    def seed(self) -> tuple[int, int]:
        return (self.master_seed, self.stream_index)


def substream(master_seed: int, index: int) -> RngStream:
    return RngStream(int(master_seed), int(index))


def thread_count() -> int:
    """Worker count from ``PERCEPT_FUSION_THREADS`` (0 or unset means auto)."""
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if n < 0:
        raise ConfigurationError(f"{THREADS_ENV} must be >= 0, got {n}")
    return n or (os.cpu_count() or 1)


def parallel_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Order-preserving map over a thread pool.

    Results never depend on the worker count because every work item owns
    its own random stream.
    """
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def chunk_sizes(n_total: int, chunk: int) -> Sequence[int]:
    """Split ``n_total`` into fixed-size chunks (last one possibly shorter)."""
    full, rest = divmod(n_total, chunk)
    return [chunk] * full + ([rest] if rest else [])

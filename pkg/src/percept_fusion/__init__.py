"""Computational models of multisensory perception."""

from .core import (
    ConfigurationError,
    DataError,
    DegeneratePriorError,
    FitFailureError,
    GaussianEstimate,
    InvalidParameterError,
    Modality,
    PerceptFusionError,
    RngStream,
    SimulationTimeoutError,
    StimulusEvent,
    substream,
)

__version__ = "0.1.0"

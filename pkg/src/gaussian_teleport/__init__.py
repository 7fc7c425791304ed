"""Gaussian teleportation assisted by a third party's squeezed-state measurement."""

from .core import (
    DomainError,
    HomodyneLimitError,
    InputState,
    MeasurementSpec,
    NonPhysicalError,
    StructureError,
    ThreeModeState,
    TwoModeState,
    build_example_channel,
    build_symmetric_channel,
    builtin_channel,
    is_genuine,
    is_separable_two_mode,
    partial_trace_third,
    squeezed_cm,
)
from .fidelity import conditional_cm, conditional_fidelity, fidelity_tr, measurement_matrix, outcome_probability
from .optimizer import MeasurementKind, OptimizationResult, optimize

__all__ = [
    "DomainError",
    "HomodyneLimitError",
    "InputState",
    "MeasurementKind",
    "MeasurementSpec",
    "NonPhysicalError",
    "OptimizationResult",
    "StructureError",
    "ThreeModeState",
    "TwoModeState",
    "build_example_channel",
    "build_symmetric_channel",
    "builtin_channel",
    "conditional_cm",
    "conditional_fidelity",
    "fidelity_tr",
    "is_genuine",
    "is_separable_two_mode",
    "measurement_matrix",
    "optimize",
    "outcome_probability",
    "partial_trace_third",
    "squeezed_cm",
]

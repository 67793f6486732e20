from .catalog import BASE_SYSTEMS, builtin, names
from .model import (
    Guard,
    MotionSystem,
    SamplePoint,
    SamplingExhausted,
    SystemDefinitionError,
    batch_binding,
    constants_at,
    sample,
)

__all__ = [
    "BASE_SYSTEMS",
    "Guard",
    "MotionSystem",
    "SamplePoint",
    "SamplingExhausted",
    "SystemDefinitionError",
    "batch_binding",
    "builtin",
    "constants_at",
    "names",
    "sample",
]

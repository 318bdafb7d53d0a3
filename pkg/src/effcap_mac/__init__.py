"""Effective-capacity throughput regions of multiple-access fading channels."""

__version__ = "0.1.0"

from .config import ConfigError, RunConfig
from .effcap import QosSpec, effective_capacity
from .fading import FadingModel
from .rates import DecodingOrder, SystemParams

__all__ = ["ConfigError", "DecodingOrder", "FadingModel", "QosSpec", "RunConfig",
           "SystemParams", "effective_capacity", "__version__"]

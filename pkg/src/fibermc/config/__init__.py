"""Configuration subpackage."""

from .loader import load_config, resolve_config
from .schema import (
    ChainConfig,
    FiberConfig,
    FitConfig,
    RunConfig,
    ScanConfig,
    StatisticName,
)
from .settings import settings

__all__ = [
    "load_config",
    "resolve_config",
    "ChainConfig",
    "FiberConfig",
    "FitConfig",
    "RunConfig",
    "ScanConfig",
    "StatisticName",
    "settings",
]

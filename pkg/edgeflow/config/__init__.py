"""Configuration management for edgeflow."""

from edgeflow.config.schema import DebiasConfig, FitConfig, PriorityConfig, StudyConfig
from edgeflow.config.settings import Settings, get_settings

__all__ = [
    "DebiasConfig",
    "FitConfig",
    "PriorityConfig",
    "Settings",
    "StudyConfig",
    "get_settings",
]

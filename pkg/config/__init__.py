"""Configuration package."""
from .settings import EmConfig, Settings, SpectralConfig, settings, load_config

__all__ = ["EmConfig", "Settings", "SpectralConfig", "settings", "load_config"]

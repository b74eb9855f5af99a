"""Utility package."""
from .logging import setup_logging
from .random import make_rng, spawn

__all__ = ["setup_logging", "make_rng", "spawn"]

"""Configuration module."""

from .settings import settings, Settings

__version__ = "0.1.0"

__all__ = ["settings", "Settings", "__version__"]

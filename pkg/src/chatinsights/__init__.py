"""Insight recording, scoring, and organization for conversational data analysis."""

__version__ = "0.1.0"

from .config import AppConfig, load_config
from .engine import SessionEngine

__all__ = ["AppConfig", "SessionEngine", "load_config", "__version__"]

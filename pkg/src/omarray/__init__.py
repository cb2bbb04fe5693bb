"""Slow light and storage in arrays of optomechanical elements side-coupled to a waveguide."""

from .model import PRESETS, SystemParams, get_preset, validate_params

__all__ = ["PRESETS", "SystemParams", "get_preset", "validate_params"]
__version__ = "0.1.0"

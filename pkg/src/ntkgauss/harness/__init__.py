"""Experiments, configuration, fitting and output writers behind the CLI."""

from .config import PRESETS, RunConfig, load_config
from .fitting import PowerLawFit, power_law_fit

__all__ = ["PRESETS", "PowerLawFit", "RunConfig", "load_config", "power_law_fit"]

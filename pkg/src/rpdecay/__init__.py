"""Mode-by-mode numerical checks of r^p-weighted decay estimates for waves on spherically symmetric backgrounds."""

from .background import BackgroundSpec, angular_eigenvalue, chart, metric_sample, tortoise
from .errors import RpDecayError
from .evolve import CharacteristicData, ModeField, NullGrid, evolve, sweep

__version__ = "0.1.0"

__all__ = [
    "BackgroundSpec",
    "CharacteristicData",
    "ModeField",
    "NullGrid",
    "RpDecayError",
    "angular_eigenvalue",
    "chart",
    "evolve",
    "metric_sample",
    "sweep",
    "tortoise",
]

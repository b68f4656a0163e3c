"""cnn-spreading - Spreading speeds of cellular neural network lattices."""

__version__ = "0.1.0"

from cnn_spreading.cli import cli  # noqa: E402
from cnn_spreading.dispersion import Direction, DispersionCurve, Template  # noqa: E402
from cnn_spreading.speed_solver import SpeedReport, analyze, classify_sign, solve_speed  # noqa: E402

__all__ = [
    "Direction",
    "DispersionCurve",
    "SpeedReport",
    "Template",
    "__version__",
    "analyze",
    "classify_sign",
    "cli",
    "solve_speed",
]

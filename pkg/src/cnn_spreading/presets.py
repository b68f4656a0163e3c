"""Lookup table of named cloning templates."""

from cnn_spreading.dispersion import Template

# Dictionary: preset name (lowercase) -> (alpha, a, beta)
# Covers the five reference rows, the three propagation scenarios and the limiting-case base

PRESETS: dict[str, tuple[float, float, float]] = {
    # Reference rows
    "row1": (0.5, 1.0, 0.5),
    "row2": (0.05, 0.5, 0.5),
    "row3": (0.125, 0.5, 0.5),
    "row4": (0.0, 1.0, 0.5),
    "row5": (0.0, 0.55, 0.5),
    # Propagation scenarios
    "both-sides": (0.5, 1.0, 0.5),
    "symmetric": (0.5, 1.0, 0.5),
    "stop-right": (0.0, 1.0, 0.5),
    "stationary-right": (0.0, 1.0, 0.5),
    "diminish-right": (0.0, 0.55, 0.5),
    "retreat-right": (0.0, 0.55, 0.5),
    # Critical rightward speed: 2 sqrt(alpha beta) + a - 1 = 0
    "critical": (0.125, 0.5, 0.5),
    # Base of the limiting path [alpha, a, beta + s], alpha + a + beta = 1
    "limit-base": (0.7, 0.2, 0.1),
}


def get_preset(name: str) -> Template | None:
    """Look up a named template.

    Args:
        name: Preset name (case-insensitive, underscores and dashes interchangeable)

    Returns:
        Template if found, None otherwise
    """
    weights = PRESETS.get(name.lower().strip().replace("_", "-"))
    if weights is None:
        return None
    return Template(*weights)

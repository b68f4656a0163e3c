"""Front tracking: level-set positions, empirical speeds and the spreading dichotomy check."""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.stats import linregress

from cnn_spreading.dispersion import Direction, DomainError
from cnn_spreading.lattice_sim import DEFAULT_INIT_HALF_WIDTH, LatticeState
from cnn_spreading.speed_solver import SpeedReport

logger = logging.getLogger(__name__)

DEFAULT_FIT_FRACTION = 0.5
MIN_FIT_POINTS = 10

# Initial plateau half width when a front is predicted to retreat
RETREATING_INIT_HALF_WIDTH = 20

# Level bounds of the dichotomy check, as fractions of K
DECAY_LEVEL = 0.05
PLATEAU_LEVEL = 0.95


class InsufficientDataError(Exception):
    """Raised when too few front positions are available to estimate a speed."""


@dataclass(frozen=True)
class FrontTrace:
    """Front positions over time and the fitted speed.

    Attributes:
        direction: Which front was tracked
        threshold: Level set value in (0, K)
        samples: (t, position) pairs with strictly increasing t
        fitted_speed: Least-squares slope over the fit window, negated for the left front
        fit_residual: RMS distance of the fitted positions from the regression line
        fit_start: First time of the fit window
    """

    direction: Direction
    threshold: float
    samples: tuple[tuple[float, float], ...]
    fitted_speed: float
    fit_residual: float
    fit_start: float

    def __post_init__(self) -> None:
        times = [t for t, _ in self.samples]
        if any(later <= earlier for earlier, later in zip(times, times[1:], strict=False)):
            raise DomainError("FrontTrace samples must be strictly increasing in t")
        if self.fit_residual < 0:
            raise DomainError(f"fit_residual must be nonnegative, got {self.fit_residual!r}")

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.samples])

    @property
    def positions(self) -> np.ndarray:
        return np.array([p for _, p in self.samples])


def _equilibrium(state: LatticeState, equilibrium: float | None) -> float:
    if equilibrium is not None:
        return equilibrium
    if state.template is None:
        raise DomainError("Snapshot carries no template; pass the equilibrium K explicitly")
    return state.template.K


def front_position(
    state: LatticeState,
    threshold: float,
    direction: Direction,
    equilibrium: float | None = None,
) -> float | None:
    """Sub-site position where the level set x = threshold is crossed.

    Rightward this is the crossing to the right of the largest site at or above threshold,
    interpolated linearly between that site and its right neighbour (ghost sites are 0).
    Leftward is the mirror image.

    Args:
        state: Lattice snapshot
        threshold: Level value in (0, K)
        direction: RIGHTWARD for the right front, LEFTWARD for the left front
        equilibrium: K, taken from state.template when omitted

    Returns:
        Position as a real site coordinate, or None if no site reaches threshold

    Raises:
        DomainError: If threshold lies outside (0, K)
    """
    K = _equilibrium(state, equilibrium)
    if not 0 < threshold < K:
        raise DomainError(f"threshold must lie in (0, K={K:g}), got {threshold!r}")

    above = np.flatnonzero(state.values >= threshold)
    if above.size == 0:
        return None

    values = np.pad(state.values, 1)
    if direction is Direction.RIGHTWARD:
        j = int(above[-1]) + 1
        inside, outside = values[j], values[j + 1]
        offset = (inside - threshold) / (inside - outside)
        return float(j - 1 - state.half_width + offset)

    j = int(above[0]) + 1
    inside, outside = values[j], values[j - 1]
    offset = (inside - threshold) / (inside - outside)
    return float(j - 1 - state.half_width - offset)


def estimate_speed(
    snapshots: Sequence[LatticeState],
    direction: Direction,
    threshold: float | None = None,
    fit_fraction: float = DEFAULT_FIT_FRACTION,
) -> FrontTrace:
    """Fit a straight line to the front positions over the last fit_fraction of the run.

    Args:
        snapshots: Simulation snapshots in time order, carrying their template
        direction: Which front to track
        threshold: Level value; defaults to K/2
        fit_fraction: Share of the run, counted back from the final time, used for the fit

    Returns:
        FrontTrace; the leftward fitted speed is the negated slope of the left front

    Raises:
        DomainError: If fit_fraction lies outside (0, 1) or threshold outside (0, K)
        InsufficientDataError: If fewer than MIN_FIT_POINTS positions fall in the fit window
    """
    if not 0 < fit_fraction < 1:
        raise DomainError(f"fit_fraction must lie in (0, 1), got {fit_fraction!r}")
    if not snapshots:
        raise InsufficientDataError("No snapshots to track")

    K = _equilibrium(snapshots[0], None)
    if threshold is None:
        threshold = K / 2.0

    samples = []
    for state in snapshots:
        position = front_position(state, threshold, direction, equilibrium=K)
        if position is not None:
            samples.append((state.time, position))

    t0, t1 = snapshots[0].time, snapshots[-1].time
    fit_start = t0 + (1.0 - fit_fraction) * (t1 - t0)
    window = [(t, p) for t, p in samples if t >= fit_start]
    if len(window) < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"Only {len(window)} {direction.value} front positions after t={fit_start:g}, need {MIN_FIT_POINTS}; "
            "the front died or never formed (widen the initial plateau for retreating fronts)"
        )

    t = np.array([s[0] for s in window])
    p = np.array([s[1] for s in window])
    fit = linregress(t, p)
    residual = float(np.sqrt(np.mean((p - (fit.intercept + fit.slope * t)) ** 2)))
    slope = float(fit.slope)
    speed = slope if direction is Direction.RIGHTWARD else -slope
    logger.debug("%s front: speed %.6g over %d points, residual %.3g", direction.value, speed, len(window), residual)

    return FrontTrace(
        direction=direction,
        threshold=threshold,
        samples=tuple(samples),
        fitted_speed=speed,
        fit_residual=residual,
        fit_start=fit_start,
    )


def default_init_half_width(report: SpeedReport) -> int:
    """Initial plateau half width for a run: wider when a front is predicted to retreat."""
    speeds = [c for c in (report.c_plus, report.c_minus) if c is not None]
    if any(c < 0 for c in speeds):
        return RETREATING_INIT_HALF_WIDTH
    return DEFAULT_INIT_HALF_WIDTH


def verify_spreading_dichotomy(snapshots: Sequence[LatticeState], report: SpeedReport, margin: float) -> bool:
    """Check decay ahead of both fronts and convergence to K between them at the final time.

    With T the final time and [l0, r0] the support of the initial data, the check requires
    x_i <= 0.05 K for i >= r0 + (c_plus + margin) T and for i <= l0 - (c_minus + margin) T,
    and x_i >= 0.95 K for -(c_minus - margin) T <= i <= (c_plus - margin) T whenever that
    inner cone is nonempty.

    Args:
        snapshots: Simulation snapshots in time order
        report: Speeds of the template that generated the snapshots
        margin: Positive slack on the speeds

    Returns:
        True iff every cone condition holds

    Raises:
        DomainError: If margin <= 0 or the snapshots come from another template
        HypothesisError: If the report's template violates (H)
        InsufficientDataError: If there are no snapshots or the initial data are zero
    """
    if margin <= 0:
        raise DomainError(f"margin must be positive, got {margin!r}")
    report.template.require_h()
    if not snapshots:
        raise InsufficientDataError("No snapshots to check")

    initial, final = snapshots[0], snapshots[-1]
    for state in (initial, final):
        if state.template is not None and state.template != report.template:
            raise DomainError(f"Snapshots of {state.template} checked against a report for {report.template}")

    support = np.flatnonzero(initial.values > 0)
    if support.size == 0:
        raise InsufficientDataError("Initial data are identically zero; no front can form")
    left_edge = int(support[0]) - initial.half_width
    right_edge = int(support[-1]) - initial.half_width

    K = report.template.K
    T = final.time
    c_plus, c_minus = report.c_plus, report.c_minus
    indices = final.indices
    values = final.values

    ahead_right = indices >= right_edge + (c_plus + margin) * T
    ahead_left = indices <= left_edge - (c_minus + margin) * T
    if np.any(values[ahead_right | ahead_left] > DECAY_LEVEL * K):
        logger.debug("Outer cone violated at t=%g: max %.4g", T, float(np.max(values[ahead_right | ahead_left])))
        return False

    if (c_plus - margin) + (c_minus - margin) > 0:
        inner = (indices >= -(c_minus - margin) * T) & (indices <= (c_plus - margin) * T)
        if inner.any() and np.any(values[inner] < PLATEAU_LEVEL * K):
            logger.debug("Inner cone violated at t=%g: min %.4g", T, float(np.min(values[inner])))
            return False
    else:
        logger.debug("Inner cone empty for margin %g, skipped", margin)

    return True


def fit_gap(trace: FrontTrace, report: SpeedReport) -> float:
    """Absolute difference between the fitted and the formula speed of the traced direction."""
    formula = report.speed(trace.direction)
    if formula is None:
        return math.nan
    return abs(trace.fitted_speed - formula)

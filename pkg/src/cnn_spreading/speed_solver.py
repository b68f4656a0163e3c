"""Spreading speeds c* = inf Phi(mu) and their closed-form sign classification."""

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from cnn_spreading.dispersion import (
    EXP_LIMIT,
    Direction,
    DispersionCurve,
    DomainError,
    OutOfRangeError,
    ShiftedCurve,
    Template,
    min_growth_rate,
    shifted_curve,
)

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
ROOT_XTOL = 1e-12
ZERO_BAND = 1e-9
# Solved speeds this close to the zero band may land on either side of the closed-form class
BAND_SLACK = 10.0
PHI_PSI_AGREEMENT = 1e-8

# Bracket for the root of g: start at [BRACKET_LOW, BRACKET_HIGH], double the upper end up to EXP_LIMIT
BRACKET_LOW = 1e-6
BRACKET_HIGH = 1.0


class SolverError(Exception):
    """Raised when the minimizer of Phi cannot be bracketed."""


class ConsistencyError(Exception):
    """Raised when the closed-form sign class and the numerically solved speed disagree."""


class MinimizerKind(enum.Enum):
    """Where the infimum of Phi is attained."""

    INTERIOR = "interior"
    AT_INFINITY = "at_infinity"


@dataclass(frozen=True)
class Minimizer:
    """Location and value of the infimum of Phi.

    Attributes:
        kind: INTERIOR with a finite mu_star, or AT_INFINITY
        phi_value: Infimum of Phi (the spreading speed)
        mu_star: Positive minimizer for INTERIOR, math.inf for AT_INFINITY
    """

    kind: MinimizerKind
    phi_value: float
    mu_star: float = math.inf

    @property
    def is_interior(self) -> bool:
        return self.kind is MinimizerKind.INTERIOR


class SignClass(enum.Enum):
    """Sign of a spreading speed."""

    POSITIVE = "positive"
    ZERO = "zero"
    NEGATIVE = "negative"

    @classmethod
    def of(cls, value: float, band: float = ZERO_BAND) -> "SignClass":
        """Classify a number, reporting ZERO inside the band [-band, band]."""
        if abs(value) <= band:
            return cls.ZERO
        return cls.POSITIVE if value > 0 else cls.NEGATIVE


@dataclass(frozen=True)
class SpeedReport:
    """Both spreading speeds of a template.

    Speeds, minimizers and signs are None when hypothesis (H) fails.
    """

    template: Template
    hypothesis_h: bool
    c_plus: float | None = None
    c_minus: float | None = None
    minimizer_plus: Minimizer | None = None
    minimizer_minus: Minimizer | None = None
    sign_plus: SignClass | None = None
    sign_minus: SignClass | None = None

    def speed(self, direction: Direction) -> float | None:
        return self.c_plus if direction is Direction.RIGHTWARD else self.c_minus

    def minimizer(self, direction: Direction) -> Minimizer | None:
        return self.minimizer_plus if direction is Direction.RIGHTWARD else self.minimizer_minus


def _root_of_g(curve: DispersionCurve, tol: float, xtol: float) -> float:
    """Locate the unique zero of the nondecreasing function g on (0, inf).

    Raises:
        SolverError: If g stays positive down to mu = 1e-300
        OutOfRangeError: If g is still nonpositive at mu = EXP_LIMIT, where e^mu stops being representable
    """
    low, high = BRACKET_LOW, BRACKET_HIGH

    # g(0) = -h(0) < 0 under (H); shrink the lower end if the root sits below it
    while curve.g(low) > 0:
        low /= 10.0
        if low < 1e-300:
            raise SolverError(f"g stays positive near mu = 0 for {curve.template} ({curve.direction.value})")

    while curve.g(high) <= 0:
        if high >= EXP_LIMIT:
            raise OutOfRangeError(
                f"g has no sign change below mu = {EXP_LIMIT:g} for {curve.template} ({curve.direction.value})"
            )
        low, high = high, min(2.0 * high, EXP_LIMIT)
    logger.debug("g bracket for %s %s: [%g, %g]", curve.template, curve.direction.value, low, high)

    mu_star = bisect(curve.g, low, high, xtol=xtol, maxiter=500)
    residual = abs(curve.g(mu_star))
    if residual > tol:
        logger.debug(
            "|g(mu*)| = %.3e above tol %.1e at mu* = %.6g, interval-width criterion met", residual, tol, mu_star
        )
    return mu_star


def solve_speed(
    curve: DispersionCurve | ShiftedCurve,
    tol: float = DEFAULT_TOL,
    xtol: float = ROOT_XTOL,
) -> tuple[float, Minimizer]:
    """Compute the spreading speed c* = inf_{mu > 0} Phi(mu) of one direction.

    Args:
        curve: Direction-resolved dispersion curve, or a shifted variant of one
        tol: Tolerance on |g(mu*)| for interior minimizers
        xtol: Bisection interval width for the root of g

    Returns:
        Tuple of (speed, minimizer)

    Raises:
        DomainError: If tol <= 0
        HypothesisError: If the underlying template violates (H)
        SolverError: If the minimizer cannot be bracketed
        OutOfRangeError: If alpha_eff is so small that the minimizer lies beyond EXP_LIMIT
    """
    if tol <= 0 or xtol <= 0:
        raise DomainError(f"Tolerances must be positive, got tol={tol!r}, xtol={xtol!r}")

    if isinstance(curve, ShiftedCurve):
        speed, minimizer = solve_speed(curve.base, tol=tol, xtol=xtol)
        shifted = Minimizer(minimizer.kind, minimizer.phi_value - curve.c0, minimizer.mu_star)
        return speed - curve.c0, shifted

    curve.template.require_h()

    if curve.alpha_eff > 0:
        # Phi(+inf) = +inf: the infimum is interior
        mu_star = _root_of_g(curve, tol, xtol)
    else:
        # Phi(+inf) = 0 already satisfies the normalization, so lambda(+inf) decides the sign
        normalized = shifted_curve(curve, curve.phi_at_infinity())
        if curve.lam_at_infinity() >= 1.0:
            logger.debug("%s %s: speed 0 attained at infinity", curve.template, curve.direction.value)
            return 0.0, Minimizer(MinimizerKind.AT_INFINITY, normalized.phi_at_infinity())
        mu_star = _root_of_g(curve, tol, xtol)

    speed = curve.phi(mu_star)
    psi = curve.psi(mu_star)
    if abs(speed - psi) > PHI_PSI_AGREEMENT * max(1.0, abs(speed)):
        logger.warning("Phi(mu*) = %.12g and Psi(mu*) = %.12g disagree for %s", speed, psi, curve.template)
    return speed, Minimizer(MinimizerKind.INTERIOR, speed, mu_star)


def grid_infimum(curve: DispersionCurve, mu_min: float = 1e-3, mu_max: float = 50.0, step: float = 1e-3) -> float:
    """Brute-force infimum of Phi over a uniform mu grid.

    Args:
        curve: Direction-resolved dispersion curve
        mu_min: First grid point (> 0)
        mu_max: Last grid point
        step: Grid spacing

    Returns:
        Smallest sampled value of Phi
    """
    if not 0 < mu_min < mu_max or step <= 0:
        raise DomainError(f"Need 0 < mu_min < mu_max and step > 0, got {mu_min!r}, {mu_max!r}, {step!r}")
    count = int(round((mu_max - mu_min) / step)) + 1
    grid = np.linspace(mu_min, mu_min + (count - 1) * step, count)
    return float(np.min(curve.sample(grid).phi))


def classify_sign(template: Template, direction: Direction) -> SignClass:
    """Closed-form sign of the spreading speed, without numerical minimization.

    Uses the infimum h0 of h over mu > 0: when alpha_eff > 0 the sign of the speed is the
    sign of h0; when alpha_eff = 0 the speed is zero for a >= 1 and negative for a < 1.
    For an interior minimum at mu0 the zero band is applied to Phi(mu0) = h0 / mu0, which
    agrees with c* up to terms of order h0 squared.

    Args:
        template: Cloning template satisfying (H)
        direction: Propagation direction

    Returns:
        SignClass of c*_+ (RIGHTWARD) or c*_- (LEFTWARD)

    Raises:
        HypothesisError: If (H) fails
    """
    template.require_h()
    curve = DispersionCurve(template, direction)

    if curve.alpha_eff == 0:
        return SignClass.ZERO if curve.a >= 1 else SignClass.NEGATIVE

    h0, location = min_growth_rate(curve)
    if location == 0.0:
        # h increases on mu > 0 and h(0) > 0 under (H)
        return SignClass.POSITIVE
    return SignClass.of(h0 / location)


def _signs_agree(sign: SignClass, speed: float) -> bool:
    """Check a closed-form class against a solved speed, allowing ZERO near the band edge."""
    numeric = SignClass.of(speed)
    if numeric is sign:
        return True
    if SignClass.ZERO in (numeric, sign) and abs(speed) <= BAND_SLACK * ZERO_BAND:
        logger.warning("Speed %.3e sits at the zero band edge; reporting the closed-form class %s", speed, sign.value)
        return True
    return False


def analyze(template: Template, tol: float = DEFAULT_TOL) -> SpeedReport:
    """Compute and classify both spreading speeds of a template.

    Args:
        template: Cloning template
        tol: Tolerance on |g(mu*)| passed to solve_speed

    Returns:
        SpeedReport; when (H) fails it only carries hypothesis_h = False

    Raises:
        ConsistencyError: If the closed-form sign class contradicts the solved speed
    """
    if not template.satisfies_h:
        return SpeedReport(template=template, hypothesis_h=False)

    results = {}
    for direction in Direction:
        speed, minimizer = solve_speed(DispersionCurve(template, direction), tol=tol)
        sign = classify_sign(template, direction)
        if not _signs_agree(sign, speed):
            raise ConsistencyError(
                f"{template} {direction.value}: closed form says {sign.value}, solver gives {speed:.3e}"
            )
        results[direction] = (speed, minimizer, sign)

    c_plus, minimizer_plus, sign_plus = results[Direction.RIGHTWARD]
    c_minus, minimizer_minus, sign_minus = results[Direction.LEFTWARD]
    return SpeedReport(
        template=template,
        hypothesis_h=True,
        c_plus=c_plus,
        c_minus=c_minus,
        minimizer_plus=minimizer_plus,
        minimizer_minus=minimizer_minus,
        sign_plus=sign_plus,
        sign_minus=sign_minus,
    )

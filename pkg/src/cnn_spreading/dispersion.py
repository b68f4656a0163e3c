"""Dispersion relation of the linearized cellular neural network lattice."""

import enum
import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

# Largest argument math.exp accepts without overflowing a double
EXP_LIMIT = 709.78


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


class OutOfRangeError(ArithmeticError):
    """Raised when an exponential evaluation overflows double precision."""


class HypothesisError(Exception):
    """Raised when a template or template path violates the assumptions of the spreading theory."""


@dataclass(frozen=True)
class Template:
    """Cloning template [alpha, a, beta] of the lattice.

    Attributes:
        alpha: Rightward coupling weight (influence of cell i-1 on cell i)
        a: Self coupling weight
        beta: Leftward coupling weight (influence of cell i+1 on cell i)
    """

    alpha: float
    a: float
    beta: float

    def __post_init__(self) -> None:
        for name in ("alpha", "a", "beta"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise DomainError(f"Template weight {name} must be a finite nonnegative number, got {value!r}")
            object.__setattr__(self, name, float(value))

    @property
    def K(self) -> float:
        """Positive equilibrium alpha + a + beta."""
        return self.alpha + self.a + self.beta

    @property
    def satisfies_h(self) -> bool:
        """Whether hypothesis (H) holds: alpha + beta > 0 and alpha + a + beta > 1."""
        return self.alpha + self.beta > 0 and self.K > 1

    def require_h(self) -> None:
        """Raise HypothesisError unless hypothesis (H) holds."""
        if self.alpha + self.beta <= 0:
            raise HypothesisError(f"{self} has alpha + beta = 0; no coupling, no spreading speed exists")
        if self.K <= 1:
            raise HypothesisError(f"{self} has alpha + a + beta = {self.K:g} <= 1; no spreading speed exists")

    def swapped(self) -> "Template":
        """Return the mirror template [beta, a, alpha]."""
        return Template(self.beta, self.a, self.alpha)

    def distance(self, other: "Template") -> float:
        """Largest componentwise gap to another template."""
        return max(abs(self.alpha - other.alpha), abs(self.a - other.a), abs(self.beta - other.beta))

    def __str__(self) -> str:
        return f"[{self.alpha:g}, {self.a:g}, {self.beta:g}]"


class Direction(enum.Enum):
    """Propagation direction of a spreading speed."""

    RIGHTWARD = "rightward"
    LEFTWARD = "leftward"

    @property
    def opposite(self) -> "Direction":
        return Direction.LEFTWARD if self is Direction.RIGHTWARD else Direction.RIGHTWARD


def _weighted_exp(coefficient: float, exponent: float) -> float:
    """Return coefficient * exp(exponent), treating a zero coefficient as an exact zero term."""
    if coefficient == 0.0:
        return 0.0
    if exponent > EXP_LIMIT:
        raise OutOfRangeError(f"exp({exponent:g}) overflows double precision")
    return coefficient * math.exp(exponent)


class GrowthCurve(Protocol):
    """Evaluator interface shared by dispersion curves and their shifted variants."""

    def h(self, mu: float) -> float: ...

    def psi(self, mu: float) -> float: ...

    def phi(self, mu: float) -> float: ...

    def g(self, mu: float) -> float: ...

    def h2(self, mu: float) -> float: ...

    def phi_at_infinity(self) -> float: ...


@dataclass(frozen=True)
class DispersionSamples:
    """Dispersion data of one direction sampled on a grid of mu values."""

    mu: np.ndarray
    h: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    g: np.ndarray

    @property
    def lam(self) -> np.ndarray:
        """Principal eigenvalues e^h on the grid; raises OutOfRangeError on overflow."""
        try:
            with np.errstate(over="raise"):
                return np.exp(self.h)
        except FloatingPointError as e:
            raise OutOfRangeError("lambda overflows double precision on this grid") from e


@dataclass(frozen=True)
class DispersionCurve:
    """Direction-resolved dispersion relation h(mu) = a - 1 + alpha_eff e^mu + beta_eff e^-mu.

    The leftward curve is the rightward curve of the swapped template, so every evaluation
    stays on the mu > 0 half-line.
    """

    template: Template
    direction: Direction = Direction.RIGHTWARD

    @property
    def alpha_eff(self) -> float:
        if self.direction is Direction.RIGHTWARD:
            return self.template.alpha
        return self.template.beta

    @property
    def beta_eff(self) -> float:
        if self.direction is Direction.RIGHTWARD:
            return self.template.beta
        return self.template.alpha

    @property
    def a(self) -> float:
        return self.template.a

    def h(self, mu: float) -> float:
        """Growth rate h(mu) = ln lambda(mu) of the exponential profile e^{-mu i}."""
        return self.a - 1.0 + _weighted_exp(self.alpha_eff, mu) + _weighted_exp(self.beta_eff, -mu)

    def psi(self, mu: float) -> float:
        """Logarithmic derivative Psi(mu) = h'(mu)."""
        return _weighted_exp(self.alpha_eff, mu) - _weighted_exp(self.beta_eff, -mu)

    def h2(self, mu: float) -> float:
        """Curvature h''(mu), nonnegative everywhere."""
        return _weighted_exp(self.alpha_eff, mu) + _weighted_exp(self.beta_eff, -mu)

    def phi(self, mu: float) -> float:
        """Candidate wave speed Phi(mu) = h(mu) / mu for mu > 0.

        Raises:
            DomainError: If mu <= 0
        """
        if mu <= 0:
            raise DomainError(f"Phi is defined for mu > 0, got {mu!r}")
        return self.h(mu) / mu

    def g(self, mu: float) -> float:
        """g(mu) = mu h'(mu) - h(mu); its zero marks an interior minimizer of Phi."""
        return mu * self.psi(mu) - self.h(mu)

    def lam(self, mu: float) -> float:
        """Principal eigenvalue lambda(mu) = e^{h(mu)}, for diagnostics only.

        Raises:
            OutOfRangeError: If e^{h(mu)} overflows
        """
        exponent = self.h(mu)
        if exponent > EXP_LIMIT:
            raise OutOfRangeError(f"lambda({mu:g}) = exp({exponent:g}) overflows double precision")
        return math.exp(exponent)

    def phi_at_infinity(self) -> float:
        """Limit of Phi(mu) as mu -> +infinity: +inf when alpha_eff > 0, otherwise 0."""
        return math.inf if self.alpha_eff > 0 else 0.0

    def lam_at_infinity(self) -> float:
        """Limit of lambda(mu) as mu -> +infinity (finite only when alpha_eff = 0)."""
        if self.alpha_eff > 0:
            return math.inf
        return math.exp(self.a - 1.0)

    def sample(self, mu: np.ndarray) -> DispersionSamples:
        """Evaluate h, Phi, Psi and g (and lazily lambda) on a grid of positive mu values.

        Args:
            mu: One-dimensional array of mu > 0

        Returns:
            DispersionSamples holding one array per quantity

        Raises:
            DomainError: If any mu <= 0
            OutOfRangeError: If an exponential overflows on the grid
        """
        mu = np.asarray(mu, dtype=float)
        if mu.ndim != 1 or np.any(mu <= 0):
            raise DomainError("mu grid must be a one-dimensional array of positive values")

        try:
            with np.errstate(over="raise"):
                up = self.alpha_eff * np.exp(mu) if self.alpha_eff else np.zeros_like(mu)
                down = self.beta_eff * np.exp(-mu) if self.beta_eff else np.zeros_like(mu)
                h = self.a - 1.0 + up + down
        except FloatingPointError as e:
            raise OutOfRangeError(f"dispersion grid up to mu={mu.max():g} overflows double precision") from e

        psi = up - down
        return DispersionSamples(mu=mu, h=h, phi=h / mu, psi=psi, g=mu * psi - h)


@dataclass(frozen=True)
class ShiftedCurve:
    """Curve whose growth rate is h(mu) - c0 mu, i.e. lambda(mu) multiplied by e^{-c0 mu}.

    Its speed is the base speed minus c0, and g is unchanged by the shift.
    """

    base: DispersionCurve
    c0: float

    def h(self, mu: float) -> float:
        return self.base.h(mu) - self.c0 * mu

    def psi(self, mu: float) -> float:
        return self.base.psi(mu) - self.c0

    def phi(self, mu: float) -> float:
        return self.base.phi(mu) - self.c0

    def g(self, mu: float) -> float:
        return mu * self.psi(mu) - self.h(mu)

    def h2(self, mu: float) -> float:
        return self.base.h2(mu)

    def phi_at_infinity(self) -> float:
        return self.base.phi_at_infinity() - self.c0


def eval_h(curve: GrowthCurve, mu: float) -> float:
    """Evaluate the growth rate h(mu)."""
    return curve.h(mu)


def eval_phi(curve: GrowthCurve, mu: float) -> float:
    """Evaluate Phi(mu) = h(mu) / mu; raises DomainError for mu <= 0."""
    if mu <= 0:
        raise DomainError(f"Phi is defined for mu > 0, got {mu!r}")
    return curve.phi(mu)


def eval_psi(curve: GrowthCurve, mu: float) -> float:
    """Evaluate Psi(mu) = h'(mu) on the whole real line."""
    return curve.psi(mu)


def eval_g(curve: GrowthCurve, mu: float) -> float:
    """Evaluate g(mu) = mu h'(mu) - h(mu)."""
    return curve.g(mu)


def shifted_curve(curve: DispersionCurve, c0: float) -> ShiftedCurve:
    """Return the evaluator of h(mu) - c0 mu.

    Shifting by c0 = Phi(+inf) reduces a finite tail to the normalization Phi(+inf) = 0.
    """
    return ShiftedCurve(base=curve, c0=float(c0))


def min_growth_rate(curve: DispersionCurve) -> tuple[float, float]:
    """Infimum h0 of h over mu > 0 and where it is approached.

    Args:
        curve: Direction-resolved dispersion curve

    Returns:
        Tuple (h0, location). The location is 0.0 when the infimum is approached at 0+,
        a positive finite mu0 = 0.5 ln(beta_eff / alpha_eff) for an interior minimum, and
        math.inf when it is approached at +infinity (alpha_eff = 0).
    """
    alpha, beta = curve.alpha_eff, curve.beta_eff
    if alpha == 0:
        # h decreases toward a - 1 (or is constant when beta = 0 as well)
        return curve.a - 1.0, math.inf
    if beta <= alpha:
        return curve.h(0.0), 0.0
    mu0 = 0.5 * math.log(beta / alpha)
    return 2.0 * math.sqrt(alpha * beta) + curve.a - 1.0, mu0

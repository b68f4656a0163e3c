"""Continuity of spreading speeds along template sequences and the limiting case alpha + a + beta -> 1."""

import enum
import logging
import math
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

from cnn_spreading.dispersion import (
    Direction,
    DispersionCurve,
    DomainError,
    HypothesisError,
    Template,
)
from cnn_spreading.speed_solver import DEFAULT_TOL, SpeedReport, analyze, solve_speed

logger = logging.getLogger(__name__)

NEAR_LIMIT_XTOL = 1e-13
DEFAULT_LIMIT_TOLERANCE = 1e-2
SANDWICH_SLACK = 1e-9

# (K1)-(K4) are checked by finite differences at (s, mu) = (0, 0)
ASSUMPTION_STEP = 1e-5
ASSUMPTION_MARGIN = 1e-8
ASSUMPTION_SAMPLES = 16


def default_sequence_indices() -> list[int]:
    """Geometric index grid n = 2^k, k = 0..14."""
    return [2**k for k in range(15)]


def default_s_grid() -> list[float]:
    """Geometric parameter grid s = 10^-k, k = 1..5, decreasing toward 0."""
    return [10.0**-k for k in range(1, 6)]


@dataclass(frozen=True)
class TemplateSequence:
    """Finite stretch of a template sequence with its declared limit.

    Attributes:
        entries: Templates in index order
        limit: Declared componentwise limit
        indices: Label n of each entry (defaults to 1, 2, ...)
        tolerance: Allowed distance between the last entry and the limit
    """

    entries: tuple[Template, ...]
    limit: Template
    indices: tuple[float, ...] = ()
    tolerance: float = DEFAULT_LIMIT_TOLERANCE

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.indices:
            object.__setattr__(self, "indices", tuple(float(n) for n in range(1, len(self.entries) + 1)))
        else:
            object.__setattr__(self, "indices", tuple(float(n) for n in self.indices))
        if len(self.indices) != len(self.entries):
            raise DomainError(f"{len(self.indices)} indices for {len(self.entries)} entries")
        if self.entries and self.entries[-1].distance(self.limit) > self.tolerance:
            raise DomainError(
                f"Last entry {self.entries[-1]} is {self.entries[-1].distance(self.limit):.3g} away from "
                f"the declared limit {self.limit}, beyond tolerance {self.tolerance:g}"
            )

    @classmethod
    def from_function(
        cls,
        fn: Callable[[float], Template],
        indices: Iterable[float],
        limit: Template,
        tolerance: float = DEFAULT_LIMIT_TOLERANCE,
    ) -> "TemplateSequence":
        """Build a sequence by evaluating fn at each index."""
        indices = tuple(indices)
        return cls(tuple(fn(n) for n in indices), limit, indices, tolerance)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class EnvelopePair:
    """Suffix-max (upper) and suffix-min (lower) envelopes of a template sequence."""

    upper: TemplateSequence
    lower: TemplateSequence

    def __post_init__(self) -> None:
        limit = self.upper.limit
        for n, (up, low) in enumerate(zip(self.upper.entries, self.lower.entries, strict=True)):
            if not (_leq(low, limit) and _leq(limit, up)):
                raise DomainError(f"Envelope at position {n} does not bracket the limit {limit}")
        for n in range(1, len(self.upper)):
            if not _leq(self.upper.entries[n], self.upper.entries[n - 1]):
                raise DomainError(f"Upper envelope increases at position {n}")
            if not _leq(self.lower.entries[n - 1], self.lower.entries[n]):
                raise DomainError(f"Lower envelope decreases at position {n}")


def _leq(left: Template, right: Template) -> bool:
    """Componentwise order of templates."""
    return left.alpha <= right.alpha and left.a <= right.a and left.beta <= right.beta


def envelope(sequence: TemplateSequence) -> EnvelopePair:
    """Componentwise suffix extrema, each including the limit.

    upper_n = max(limit, entries_n, entries_n+1, ...) and lower_n likewise with min, so the
    upper envelope is nonincreasing, the lower one nondecreasing and both bracket the limit.

    Args:
        sequence: Template sequence with declared limit

    Returns:
        EnvelopePair with the same indices as the sequence

    Raises:
        DomainError: If the sequence is empty
    """
    if not sequence.entries:
        raise DomainError("Cannot build envelopes of an empty sequence")

    limit = sequence.limit
    upper: list[Template] = []
    lower: list[Template] = []
    high = (limit.alpha, limit.a, limit.beta)
    low = high
    for entry in reversed(sequence.entries):
        values = (entry.alpha, entry.a, entry.beta)
        high = tuple(max(h, v) for h, v in zip(high, values, strict=True))
        low = tuple(min(m, v) for m, v in zip(low, values, strict=True))
        upper.append(Template(*high))
        lower.append(Template(*low))
    upper.reverse()
    lower.reverse()

    return EnvelopePair(
        upper=TemplateSequence(tuple(upper), limit, sequence.indices, sequence.tolerance),
        lower=TemplateSequence(tuple(lower), limit, sequence.indices, sequence.tolerance),
    )


class ApproachSide(enum.Enum):
    """How a template sequence approaches its limit."""

    ABOVE = "above"
    BELOW = "below"
    MIXED = "mixed"


def approach_side(sequence: TemplateSequence) -> ApproachSide:
    """Classify monotone convergence from above or below.

    Template-induced eigenvalues are increasing in every weight, so a componentwise monotone
    sequence yields monotone lambda_n and the continuity results apply without envelopes.
    """
    chain = [*sequence.entries, sequence.limit]
    pairs = list(zip(chain, chain[1:], strict=False))
    if all(_leq(later, earlier) for earlier, later in pairs):
        return ApproachSide.ABOVE
    if all(_leq(earlier, later) for earlier, later in pairs):
        return ApproachSide.BELOW
    return ApproachSide.MIXED


@dataclass(frozen=True)
class ContinuityRow:
    """Speeds of one sequence entry and their distance to the limit speeds."""

    index: float
    report: SpeedReport
    abs_error_plus: float | None
    abs_error_minus: float | None
    sandwich_ok: bool | None
    upper: SpeedReport | None = None
    lower: SpeedReport | None = None

    @property
    def c_plus(self) -> float | None:
        return self.report.c_plus

    @property
    def c_minus(self) -> float | None:
        return self.report.c_minus


@dataclass(frozen=True)
class ContinuityReport:
    """Outcome of a finite-sample continuity check."""

    limit_report: SpeedReport
    rows: tuple[ContinuityRow, ...]
    eps: float
    converged: bool
    sandwich_holds: bool
    approach: ApproachSide

    @property
    def errors_by_n(self) -> list[tuple[float, float | None, float | None]]:
        return [(row.index, row.abs_error_plus, row.abs_error_minus) for row in self.rows]

    @property
    def envelopes_monotone(self) -> bool:
        """Whether upper envelope speeds are nonincreasing and lower ones nondecreasing in n.

        Envelope templates violating (H) are skipped.
        """
        for attribute in ("c_plus", "c_minus"):
            uppers = [getattr(row.upper, attribute) for row in self.rows if row.upper and row.upper.hypothesis_h]
            lowers = [getattr(row.lower, attribute) for row in self.rows if row.lower and row.lower.hypothesis_h]
            if any(later > earlier + SANDWICH_SLACK for earlier, later in zip(uppers, uppers[1:], strict=False)):
                return False
            if any(later < earlier - SANDWICH_SLACK for earlier, later in zip(lowers, lowers[1:], strict=False)):
                return False
        return True

    @property
    def errors_monotone(self) -> bool:
        """Whether both error columns are nonincreasing over the rows where (H) holds."""
        valid = [row for row in self.rows if row.report.hypothesis_h]
        for attribute in ("abs_error_plus", "abs_error_minus"):
            errors = [getattr(row, attribute) for row in valid]
            if any(later > earlier for earlier, later in zip(errors, errors[1:], strict=False)):
                return False
        return True


def _map_ordered(fn: Callable[[Template], SpeedReport], items: Sequence[Template], workers: int) -> list[SpeedReport]:
    """Apply fn to each item, in parallel processes when workers > 1, keeping input order."""
    if workers <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _within(low: float | None, value: float | None, high: float | None) -> bool | None:
    if low is None or value is None or high is None:
        return None
    return low - SANDWICH_SLACK <= value <= high + SANDWICH_SLACK


def verify_speed_continuity(
    sequence: TemplateSequence,
    eps: float,
    tol: float = DEFAULT_TOL,
    workers: int = 1,
) -> ContinuityReport:
    """Check that the speeds of a template sequence approach the speeds of its limit.

    Entries violating (H) are kept as rows without speeds (only finitely many may occur).
    The sandwich lower_n <= c_n <= upper_n is checked wherever both envelope templates
    satisfy (H).

    Args:
        sequence: Template sequence with declared limit
        eps: Allowed error at the last entry, in both directions
        tol: Solver tolerance
        workers: Number of processes for the independent speed solves

    Returns:
        ContinuityReport

    Raises:
        DomainError: If eps <= 0 or the sequence is empty
        HypothesisError: If the limit template violates (H)
    """
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps!r}")
    sequence.limit.require_h()
    pair = envelope(sequence)

    limit_report = analyze(sequence.limit, tol)
    count = len(sequence)
    templates = [*sequence.entries, *pair.upper.entries, *pair.lower.entries]
    reports = _map_ordered(partial(analyze, tol=tol), templates, workers)
    entry_reports = reports[:count]
    upper_reports = reports[count : 2 * count]
    lower_reports = reports[2 * count :]

    rows = []
    for n, report in enumerate(entry_reports):
        error_plus = error_minus = None
        if report.hypothesis_h:
            error_plus = abs(report.c_plus - limit_report.c_plus)
            error_minus = abs(report.c_minus - limit_report.c_minus)
        upper, lower = upper_reports[n], lower_reports[n]
        checks = [
            _within(lower.c_plus, report.c_plus, upper.c_plus),
            _within(lower.c_minus, report.c_minus, upper.c_minus),
        ]
        sandwich_ok = None if None in checks else all(checks)
        rows.append(ContinuityRow(sequence.indices[n], report, error_plus, error_minus, sandwich_ok, upper, lower))
        logger.debug("n=%g c+=%s c-=%s sandwich=%s", sequence.indices[n], report.c_plus, report.c_minus, sandwich_ok)

    last = rows[-1]
    converged = (
        last.abs_error_plus is not None
        and last.abs_error_plus <= eps
        and last.abs_error_minus is not None
        and last.abs_error_minus <= eps
    )
    sandwich_holds = all(row.sandwich_ok is not False for row in rows)
    return ContinuityReport(
        limit_report=limit_report,
        rows=tuple(rows),
        eps=eps,
        converged=converged,
        sandwich_holds=sandwich_holds,
        approach=approach_side(sequence),
    )


@dataclass(frozen=True)
class ParametrizedTemplate:
    """Template path s -> p(s) on [0, s0) approaching the degenerate surface alpha + a + beta = 1.

    The path is validated at construction: weights nondecreasing in s with a strictly
    increasing sum, the limit p(0) satisfies alpha + beta > 0 and alpha + a + beta = 1, and
    Lambda(s, mu) = exp(h_{p(s)}(mu)) satisfies (K1)-(K4) within finite-difference margins.

    Raises:
        DomainError: If s0 <= 0
        HypothesisError: If one of the path assumptions fails
    """

    evaluator: Callable[[float], Template]
    s0: float
    name: str = "custom"
    _samples: tuple[float, ...] = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.s0 > 0:
            raise DomainError(f"s0 must be positive, got {self.s0!r}")
        samples = tuple(self.s0 * k / ASSUMPTION_SAMPLES for k in range(ASSUMPTION_SAMPLES))
        object.__setattr__(self, "_samples", samples)
        self._check_monotone()
        self._check_limit()
        for direction in Direction:
            self._check_dispersion(direction)

    def __call__(self, s: float) -> Template:
        if not 0 <= s < self.s0:
            raise DomainError(f"s must lie in [0, {self.s0:g}), got {s!r}")
        return self.evaluator(s)

    @property
    def limit(self) -> Template:
        return self.evaluator(0.0)

    @classmethod
    def linear(
        cls,
        base: Template,
        rates: tuple[float, float, float],
        s0: float = 1.0,
        name: str = "linear",
    ) -> "ParametrizedTemplate":
        """Affine path s -> base + s * rates with nonnegative rates."""
        d_alpha, d_a, d_beta = rates

        def evaluator(s: float) -> Template:
            return Template(base.alpha + s * d_alpha, base.a + s * d_a, base.beta + s * d_beta)

        return cls(evaluator, s0, name)

    def _check_monotone(self) -> None:
        templates = [self.evaluator(s) for s in self._samples]
        for s, earlier, later in zip(self._samples[1:], templates, templates[1:], strict=False):
            if not _leq(earlier, later):
                raise HypothesisError(f"(S1) fails for path {self.name}: a weight decreases before s={s:g}")
            if not later.K > earlier.K:
                raise HypothesisError(f"(S1) fails for path {self.name}: alpha + a + beta not increasing at s={s:g}")

    def _check_limit(self) -> None:
        limit = self.limit
        if limit.alpha + limit.beta <= 0 or abs(limit.K - 1.0) > 1e-12:
            raise HypothesisError(f"(S2) fails for path {self.name}: limit {limit} needs alpha + beta > 0, K = 1")

    def _check_dispersion(self, direction: Direction) -> None:
        step = ASSUMPTION_STEP

        def big_h(s: float, mu: float) -> float:
            return DispersionCurve(self.evaluator(s), direction).h(mu)

        if abs(math.exp(big_h(0.0, 0.0)) - 1.0) > ASSUMPTION_MARGIN:
            raise HypothesisError(f"(K1) fails for path {self.name}: Lambda(0, 0) != 1")
        lambda_s = (math.exp(big_h(step, 0.0)) - math.exp(big_h(0.0, 0.0))) / step
        if not lambda_s > ASSUMPTION_MARGIN:
            raise HypothesisError(f"(K2) fails for path {self.name}: Lambda_s(0, 0) = {lambda_s:.3g}")
        for s in self._samples:
            for mu in (0.0, 0.5, 1.0, 2.0, 4.0):
                curvature = big_h(s, mu + step) - 2.0 * big_h(s, mu) + big_h(s, mu - step)
                if curvature < -ASSUMPTION_MARGIN * step:
                    raise HypothesisError(f"(K3) fails for path {self.name} at s={s:g}, mu={mu:g}")
        h_mumu = (big_h(0.0, step) - 2.0 * big_h(0.0, 0.0) + big_h(0.0, -step)) / step**2
        if not h_mumu > ASSUMPTION_MARGIN:
            raise HypothesisError(f"(K4) fails for path {self.name}: (ln Lambda)_mumu(0, 0) = {h_mumu:.3g}")


def special_model(base: Template, s0: float = 1.0) -> ParametrizedTemplate:
    """Path [alpha, a, beta + s] from a base template with alpha + a + beta = 1."""
    return ParametrizedTemplate.linear(base, (0.0, 0.0, 1.0), s0=s0, name=f"special{base}")


def eval_G(p: ParametrizedTemplate, s: float, mu: float, direction: Direction) -> float:
    """Evaluate G(s, mu) = mu H_mu(s, mu) - H(s, mu) for H(s, mu) = h_{p(s)}(mu).

    Raises:
        DomainError: If s is outside [0, s0) or mu < 0
    """
    if mu < 0:
        raise DomainError(f"mu must be nonnegative, got {mu!r}")
    return DispersionCurve(p(s), direction).g(mu)


@dataclass(frozen=True)
class PathPoint:
    """Speed and interior minimizer at one path parameter."""

    s: float
    speed: float
    mu_star: float


@dataclass(frozen=True)
class LimitPathReport:
    """Speeds along a path s -> 0+ compared with the predicted limit Psi(0, 0)."""

    direction: Direction
    points: tuple[PathPoint, ...]
    limit_value: float
    mu_monotone: bool

    @property
    def final_gap(self) -> float:
        return abs(self.points[-1].speed - self.limit_value)


def limiting_speed_path(
    p: ParametrizedTemplate,
    s_values: Sequence[float],
    direction: Direction,
    tol: float = DEFAULT_TOL,
) -> LimitPathReport:
    """Follow the speed and its minimizer as s decreases toward 0.

    Near s = 0 the root of g approaches mu = 0 where g flattens, so the bisection runs to the
    interval width NEAR_LIMIT_XTOL.

    Args:
        p: Validated template path
        s_values: Strictly decreasing parameters in (0, s0)
        direction: Propagation direction
        tol: Solver tolerance on |g|

    Returns:
        LimitPathReport with one point per s; the limit value is Psi(0, 0) of the direction,
        i.e. alpha - beta rightward and beta - alpha leftward

    Raises:
        DomainError: If s_values is empty, not strictly decreasing or outside (0, s0)
        HypothesisError: If some p(s) violates (H); the message names s
    """
    s_values = [float(s) for s in s_values]
    if not s_values:
        raise DomainError("s_values must not be empty")
    if any(later >= earlier for earlier, later in zip(s_values, s_values[1:], strict=False)):
        raise DomainError("s_values must be strictly decreasing")
    if not all(0 < s < p.s0 for s in s_values):
        raise DomainError(f"s_values must lie in (0, {p.s0:g})")

    points = []
    for s in s_values:
        template = p(s)
        if not template.satisfies_h:
            raise HypothesisError(f"p(s) = {template} violates (H) at s={s:g}")
        speed, minimizer = solve_speed(DispersionCurve(template, direction), tol=tol, xtol=NEAR_LIMIT_XTOL)
        points.append(PathPoint(s, speed, minimizer.mu_star))
        logger.debug("s=%g %s speed=%.10g mu*=%.6g", s, direction.value, speed, minimizer.mu_star)

    mu_values = [point.mu_star for point in points]
    mu_monotone = all(later < earlier for earlier, later in zip(mu_values, mu_values[1:], strict=False))
    limit_value = DispersionCurve(p.limit, direction).psi(0.0)
    return LimitPathReport(direction, tuple(points), limit_value, mu_monotone)

"""Tests for the front_tracker module."""

import dataclasses
import functools
from collections.abc import Callable

import numpy as np
import pytest

from cnn_spreading.dispersion import Direction, DomainError, HypothesisError, Template
from cnn_spreading.front_tracker import (
    RETREATING_INIT_HALF_WIDTH,
    FrontTrace,
    InsufficientDataError,
    default_init_half_width,
    estimate_speed,
    fit_gap,
    front_position,
    verify_spreading_dichotomy,
)
from cnn_spreading.lattice_sim import DEFAULT_INIT_HALF_WIDTH, LatticeState, SimConfig, simulate
from cnn_spreading.speed_solver import analyze

ROW1 = Template(0.5, 1.0, 0.5)
ROW3 = Template(0.125, 0.5, 0.5)
ROW4 = Template(0.0, 1.0, 0.5)
ROW5 = Template(0.0, 0.55, 0.5)
ALL_ROWS = [ROW1, Template(0.05, 0.5, 0.5), ROW3, ROW4, ROW5]


Runner = Callable[..., tuple[LatticeState, ...]]


@pytest.fixture(scope="module")
def run() -> Runner:
    """Simulate a template with the default protocol, cached across the module."""

    @functools.cache
    def simulate_template(template: Template, t_end: float = 60.0) -> tuple[LatticeState, ...]:
        config = SimConfig.auto(template, t_end=t_end, init_half_width=default_init_half_width(analyze(template)))
        return tuple(simulate(config))

    return simulate_template


def ramp_snapshots(speed: float, times: range, half_width: int = 30) -> list[LatticeState]:
    """Plateaus of height K with linear edges whose K/2 crossings sit at +-(5 + speed t)."""
    indices = np.arange(-half_width, half_width + 1)
    snapshots = []
    for t in times:
        edge = 5.0 + speed * t
        distance = edge - np.abs(indices)
        values = ROW1.K * np.clip(distance / 2.0 + 0.5, 0.0, 1.0)
        snapshots.append(LatticeState(float(t), values, ROW1))
    return snapshots


class TestFrontPosition:
    """Tests for the level-set position of a single snapshot."""

    def test_interpolated_positions(self) -> None:
        """Test linear interpolation on both sides of a small profile."""
        state = LatticeState(0.0, np.array([0.0, 2.0, 2.0, 1.0, 0.0]), ROW1)
        assert front_position(state, 1.5, Direction.RIGHTWARD) == pytest.approx(0.5)
        assert front_position(state, 1.5, Direction.LEFTWARD) == pytest.approx(-1.25)

    def test_shift_moves_position(self) -> None:
        """Test that shifting the profile by one site moves the front by one."""
        values = np.array([0.0, 0.0, 2.0, 2.0, 1.0, 0.0, 0.0])
        base = front_position(LatticeState(0.0, values, ROW1), 1.0, Direction.RIGHTWARD)
        moved = front_position(LatticeState(0.0, np.roll(values, 1), ROW1), 1.0, Direction.RIGHTWARD)
        assert moved == pytest.approx(base + 1.0)

    def test_edge_site_uses_zero_ghost(self) -> None:
        """Test interpolation towards the zero ghost beyond the window."""
        state = LatticeState(0.0, np.array([0.0, 0.0, 2.0]), ROW1)
        assert front_position(state, 1.0, Direction.RIGHTWARD) == pytest.approx(1.5)

    def test_no_site_above_threshold(self) -> None:
        """Test that a profile below the level has no front."""
        state = LatticeState(0.0, np.full(5, 0.2), ROW1)
        assert front_position(state, 1.0, Direction.RIGHTWARD) is None

    def test_threshold_range(self) -> None:
        """Test that the level must lie strictly between 0 and K."""
        state = LatticeState(0.0, np.zeros(5), ROW1)
        with pytest.raises(DomainError, match="threshold"):
            front_position(state, 2.0, Direction.RIGHTWARD)
        with pytest.raises(DomainError, match="threshold"):
            front_position(state, 0.0, Direction.LEFTWARD)

    def test_explicit_equilibrium(self) -> None:
        """Test that K must be given for snapshots without a template."""
        state = LatticeState(0.0, np.array([0.0, 2.0, 0.0]))
        with pytest.raises(DomainError, match="equilibrium"):
            front_position(state, 1.0, Direction.RIGHTWARD)
        assert front_position(state, 1.0, Direction.RIGHTWARD, equilibrium=2.0) == pytest.approx(0.5)


class TestEstimateSpeed:
    """Tests for the least-squares speed fit."""

    def test_ramp_speed(self) -> None:
        """Test that a front moving half a site per unit time fits speed 0.5 on both sides."""
        snapshots = ramp_snapshots(0.5, range(21))
        for direction in Direction:
            trace = estimate_speed(snapshots, direction)
            assert trace.fitted_speed == pytest.approx(0.5, abs=1e-12)
            assert trace.fit_residual == pytest.approx(0.0, abs=1e-12)
            assert trace.fit_start == pytest.approx(10.0)
            assert trace.threshold == ROW1.K / 2
            assert len(trace.samples) == 21

    def test_leftward_positions_mirror(self) -> None:
        """Test that the left front position is the negated right one."""
        snapshots = ramp_snapshots(0.5, range(21))
        right = estimate_speed(snapshots, Direction.RIGHTWARD)
        left = estimate_speed(snapshots, Direction.LEFTWARD)
        assert np.allclose(left.positions, -right.positions)
        assert np.array_equal(left.times, right.times)

    def test_fit_fraction_range(self) -> None:
        """Test that fit_fraction must lie in (0, 1)."""
        snapshots = ramp_snapshots(0.5, range(21))
        with pytest.raises(DomainError, match="fit_fraction"):
            estimate_speed(snapshots, Direction.RIGHTWARD, fit_fraction=1.0)

    def test_no_snapshots(self) -> None:
        """Test that an empty run raises InsufficientDataError."""
        with pytest.raises(InsufficientDataError):
            estimate_speed([], Direction.RIGHTWARD)

    def test_too_few_points(self) -> None:
        """Test that a short run raises InsufficientDataError."""
        with pytest.raises(InsufficientDataError, match="need 10"):
            estimate_speed(ramp_snapshots(0.5, range(6)), Direction.RIGHTWARD)

    def test_dead_front(self) -> None:
        """Test that a profile that never reaches the level raises InsufficientDataError."""
        snapshots = [LatticeState(float(t), np.zeros(11), ROW1) for t in range(30)]
        with pytest.raises(InsufficientDataError, match="died or never formed"):
            estimate_speed(snapshots, Direction.LEFTWARD)


class TestFrontTrace:
    """Tests for the trace value object."""

    def test_times_strictly_increasing(self) -> None:
        """Test that repeated time stamps are rejected."""
        with pytest.raises(DomainError, match="strictly increasing"):
            FrontTrace(Direction.RIGHTWARD, 1.0, ((0.0, 1.0), (0.0, 2.0)), 0.0, 0.0, 0.0)

    def test_fit_gap(self) -> None:
        """Test the gap between a fitted speed and the formula."""
        trace = FrontTrace(Direction.RIGHTWARD, 1.0, ((0.0, 0.0), (1.0, 1.4)), 1.4, 0.0, 0.0)
        assert fit_gap(trace, analyze(ROW1)) == pytest.approx(0.1088795, abs=1e-6)


class TestDefaultInitHalfWidth:
    """Tests for the initial plateau width choice."""

    def test_widths(self) -> None:
        """Test the wider plateau for retreating fronts only."""
        assert default_init_half_width(analyze(ROW1)) == DEFAULT_INIT_HALF_WIDTH
        assert default_init_half_width(analyze(ROW4)) == DEFAULT_INIT_HALF_WIDTH
        assert default_init_half_width(analyze(ROW5)) == RETREATING_INIT_HALF_WIDTH


class TestDichotomyErrors:
    """Argument checks of the dichotomy verifier."""

    def test_margin_positive(self) -> None:
        """Test that a non-positive margin raises DomainError."""
        with pytest.raises(DomainError, match="margin"):
            verify_spreading_dichotomy(ramp_snapshots(0.5, range(3)), analyze(ROW1), 0.0)

    def test_hypothesis_required(self) -> None:
        """Test that a report without (H) raises HypothesisError."""
        with pytest.raises(HypothesisError):
            verify_spreading_dichotomy(ramp_snapshots(0.5, range(3)), analyze(Template(0.3, 0.3, 0.3)), 0.3)

    def test_template_mismatch(self) -> None:
        """Test that snapshots of another template are rejected."""
        with pytest.raises(DomainError, match="checked against"):
            verify_spreading_dichotomy(ramp_snapshots(0.5, range(3)), analyze(ROW4), 0.3)

    def test_zero_initial_data(self) -> None:
        """Test that identically zero initial data raise InsufficientDataError."""
        snapshots = [LatticeState(float(t), np.zeros(11), ROW1) for t in range(3)]
        with pytest.raises(InsufficientDataError):
            verify_spreading_dichotomy(snapshots, analyze(ROW1), 0.3)


@pytest.mark.slow
class TestSimulatedSpeeds:
    """Fitted front speeds of full simulations against the formula speeds."""

    @pytest.mark.parametrize("template", ALL_ROWS)
    def test_formula_gap(self, run: Runner, template: Template) -> None:
        """Test that both fitted speeds lie within 0.15 of the formula speeds."""
        report = analyze(template)
        for direction in Direction:
            assert fit_gap(estimate_speed(run(template), direction), report) <= 0.15

    def test_symmetric_row(self, run: Runner) -> None:
        """Test both fronts of the symmetric template."""
        snapshots = run(ROW1)
        report = analyze(ROW1)
        for direction in Direction:
            trace = estimate_speed(snapshots, direction)
            assert 1.40 <= trace.fitted_speed <= 1.52
            assert fit_gap(trace, report) <= 0.15

    def test_speed_zero_at_infinity_row(self, run: Runner) -> None:
        """Test a stopped right front and a spreading left front."""
        snapshots = run(ROW4)
        assert estimate_speed(snapshots, Direction.RIGHTWARD).fitted_speed == pytest.approx(0.0, abs=0.05)
        assert 1.21 <= estimate_speed(snapshots, Direction.LEFTWARD).fitted_speed <= 1.37

    def test_retreating_row(self, run: Runner) -> None:
        """Test a retreating right front."""
        snapshots = run(ROW5)
        report = analyze(ROW5)
        right = estimate_speed(snapshots, Direction.RIGHTWARD)
        assert right.fitted_speed == pytest.approx(-0.30, abs=0.1)
        assert fit_gap(estimate_speed(snapshots, Direction.LEFTWARD), report) <= 0.15

    def test_critical_row(self, run: Runner) -> None:
        """Test the zero-speed row within the pulled-front band."""
        trace = estimate_speed(run(ROW3), Direction.RIGHTWARD)
        assert abs(trace.fitted_speed) <= 0.08

    def test_threshold_robustness(self, run: Runner) -> None:
        """Test that the fitted speed hardly depends on the level."""
        snapshots = run(ROW1)
        speeds = [
            estimate_speed(snapshots, Direction.RIGHTWARD, threshold=fraction * ROW1.K).fitted_speed
            for fraction in (0.25, 0.5, 0.75)
        ]
        assert max(speeds) - min(speeds) <= 0.05

    def test_sign_agreement(self, run: Runner) -> None:
        """Test that fitted and formula speeds agree in sign away from zero."""
        for template in (ROW1, ROW4, ROW5):
            report = analyze(template)
            snapshots = run(template)
            for direction in Direction:
                formula = report.speed(direction)
                if abs(formula) > 0.1:
                    assert np.sign(estimate_speed(snapshots, direction).fitted_speed) == np.sign(formula)

    def test_gap_shrinks_with_run_length(self, run: Runner) -> None:
        """Test that longer runs fit closer to the formula speed."""
        report = analyze(ROW1)
        gaps = [fit_gap(estimate_speed(run(ROW1, t_end), Direction.RIGHTWARD), report) for t_end in (30.0, 60.0, 120.0)]
        assert gaps[0] >= gaps[1] >= gaps[2]


@pytest.mark.slow
class TestSimulatedDichotomy:
    """Spreading dichotomy on full simulations."""

    @pytest.mark.parametrize("template", [ROW1, ROW4, ROW5])
    def test_holds(self, run: Runner, template: Template) -> None:
        """Test the cone conditions at margin 0.3."""
        assert verify_spreading_dichotomy(run(template), analyze(template), 0.3)

    def test_understated_speed_fails(self, run: Runner) -> None:
        """Test that a report understating the right speed by 1 violates the outer cone."""
        report = analyze(ROW1)
        slow = dataclasses.replace(report, c_plus=report.c_plus - 1.0)
        assert not verify_spreading_dichotomy(run(ROW1), slow, 0.3)

"""Tests for the asymptotics module."""

import numpy as np
import pytest

from cnn_spreading.asymptotics import (
    ApproachSide,
    ContinuityReport,
    ContinuityRow,
    ParametrizedTemplate,
    TemplateSequence,
    approach_side,
    default_s_grid,
    default_sequence_indices,
    envelope,
    eval_G,
    limiting_speed_path,
    special_model,
    verify_speed_continuity,
)
from cnn_spreading.dispersion import Direction, DomainError, HypothesisError, Template
from cnn_spreading.speed_solver import analyze

LIMIT = Template(0.5, 1.0, 0.5)
LIMIT_BASE = Template(0.7, 0.2, 0.1)


def decreasing_sequence() -> TemplateSequence:
    """The sequence [0.5 + 1/n, 1, 0.5] at n = 2^k, k = 0..14."""
    return TemplateSequence.from_function(
        lambda n: Template(0.5 + 1.0 / n, 1.0, 0.5), default_sequence_indices(), LIMIT
    )


class TestTemplateSequence:
    """Tests for sequence construction."""

    def test_default_indices(self) -> None:
        """Test that indices default to 1..N."""
        sequence = TemplateSequence((LIMIT, LIMIT), LIMIT)
        assert sequence.indices == (1.0, 2.0)
        assert len(sequence) == 2

    def test_from_function_keeps_indices(self) -> None:
        """Test that from_function labels rows with the supplied indices."""
        sequence = decreasing_sequence()
        assert sequence.indices[-1] == 2.0**14
        assert sequence.entries[0] == Template(1.5, 1.0, 0.5)

    def test_last_entry_far_from_limit(self) -> None:
        """Test that a last entry beyond the tolerance raises DomainError."""
        with pytest.raises(DomainError, match="away from"):
            TemplateSequence((Template(0.9, 1.0, 0.5),), LIMIT)

    def test_index_count_mismatch(self) -> None:
        """Test that indices must match the entries."""
        with pytest.raises(DomainError, match="indices"):
            TemplateSequence((LIMIT, LIMIT), LIMIT, indices=(1.0,))

    def test_default_grids(self) -> None:
        """Test the geometric default grids."""
        assert default_sequence_indices()[0] == 1
        assert default_sequence_indices()[-1] == 2**14
        assert default_s_grid() == pytest.approx([1e-1, 1e-2, 1e-3, 1e-4, 1e-5])


class TestEnvelope:
    """Tests for suffix-extrema envelopes."""

    def test_constant_sequence(self) -> None:
        """Test that a constant sequence is its own envelope."""
        sequence = TemplateSequence((LIMIT,) * 4, LIMIT)
        pair = envelope(sequence)
        assert pair.upper.entries == sequence.entries
        assert pair.lower.entries == sequence.entries

    def test_monotone_decreasing(self) -> None:
        """Test that a decreasing sequence is its own upper envelope and the limit its lower one."""
        sequence = decreasing_sequence()
        pair = envelope(sequence)
        assert pair.upper.entries == sequence.entries
        assert all(entry == LIMIT for entry in pair.lower.entries)

    def test_alternating_against_suffix_scan(self) -> None:
        """Test alpha_n = 0.5 + (-1)^n / n against a direct suffix scan."""
        indices = list(range(2, 202))
        alphas = np.array([0.5 + (-1) ** n / n for n in indices])
        sequence = TemplateSequence.from_function(lambda n: Template(0.5 + (-1) ** n / n, 1.0, 0.5), indices, LIMIT)
        pair = envelope(sequence)
        for k in range(len(indices)):
            tail = alphas[k:]
            assert pair.upper.entries[k].alpha == pytest.approx(max(0.5, tail.max()))
            assert pair.lower.entries[k].alpha == pytest.approx(min(0.5, tail.min()))

    def test_empty_sequence(self) -> None:
        """Test that an empty sequence raises DomainError."""
        with pytest.raises(DomainError, match="empty"):
            envelope(TemplateSequence((), LIMIT))

    def test_approach_side(self) -> None:
        """Test monotone approach classification."""
        assert approach_side(decreasing_sequence()) is ApproachSide.ABOVE
        below = TemplateSequence.from_function(lambda n: Template(0.5 - 0.4 / n, 1.0, 0.5), range(1, 100), LIMIT)
        assert approach_side(below) is ApproachSide.BELOW
        mixed = TemplateSequence.from_function(
            lambda n: Template(0.5 + (-1) ** n / n, 1.0, 0.5), range(2, 202), LIMIT
        )
        assert approach_side(mixed) is ApproachSide.MIXED


class TestSpeedContinuity:
    """Tests for verify_speed_continuity."""

    def test_decreasing_sequence_converges(self) -> None:
        """Test monotone decreasing errors, the 1e-3 bound at n = 2^14 and the sandwich."""
        report = verify_speed_continuity(decreasing_sequence(), eps=1e-3)
        errors_plus = [error for _, error, _ in report.errors_by_n]
        assert all(later < earlier for earlier, later in zip(errors_plus, errors_plus[1:], strict=False))
        assert errors_plus[-1] <= 1e-3
        assert report.converged
        assert report.sandwich_holds
        assert all(row.sandwich_ok for row in report.rows)
        assert report.errors_monotone
        assert report.limit_report.c_plus == pytest.approx(1.5088795, abs=1e-6)

    def test_constant_sequence_zero_error(self) -> None:
        """Test that a constant sequence converges at once with zero error."""
        report = verify_speed_continuity(TemplateSequence((LIMIT,), LIMIT), eps=1e-12)
        assert report.converged
        assert report.errors_by_n == [(1.0, 0.0, 0.0)]

    def test_into_zero_speed_limit(self) -> None:
        """Test entries with Phi(+inf) = +inf converging to a limit whose speed is attained at infinity."""
        limit = Template(0.0, 1.0, 0.5)
        sequence = TemplateSequence.from_function(
            lambda n: Template(1.0 / n, 1.0, 0.5), default_sequence_indices()[3:], limit
        )
        report = verify_speed_continuity(sequence, eps=1e-2)
        assert report.limit_report.c_plus == 0.0
        speeds = [row.c_plus for row in report.rows]
        assert all(speed > 0 for speed in speeds)
        assert all(later < earlier for earlier, later in zip(speeds, speeds[1:], strict=False))
        assert speeds[-1] < 0.01
        assert report.converged
        assert report.sandwich_holds

    def test_entries_violating_h_are_kept(self) -> None:
        """Test that early entries without (H) are reported without speeds."""
        sequence = TemplateSequence((Template(0.1, 0.1, 0.1), LIMIT), LIMIT)
        report = verify_speed_continuity(sequence, eps=1e-6)
        assert report.rows[0].c_plus is None
        assert report.rows[0].abs_error_plus is None
        assert report.converged

    def test_limit_without_h(self) -> None:
        """Test that a limit violating (H) raises HypothesisError."""
        limit = Template(0.3, 0.3, 0.3)
        with pytest.raises(HypothesisError):
            verify_speed_continuity(TemplateSequence((limit,), limit), eps=1e-3)

    def test_invalid_eps(self) -> None:
        """Test that eps must be positive."""
        with pytest.raises(DomainError):
            verify_speed_continuity(decreasing_sequence(), eps=0.0)

    def test_envelope_speeds_decreasing_sequence(self) -> None:
        """Test that a sequence from above is its own upper envelope and the limit its lower one."""
        report = verify_speed_continuity(decreasing_sequence(), eps=1e-3)
        assert report.envelopes_monotone
        for row in report.rows:
            assert row.upper.c_plus == row.c_plus
            assert row.lower.c_plus == pytest.approx(report.limit_report.c_plus, abs=1e-12)

    def test_envelope_speeds_alternating_sequence(self) -> None:
        """Test monotone envelope speeds around an oscillating sequence."""
        sequence = TemplateSequence.from_function(
            lambda n: Template(0.5 + (-1) ** n / n, 1.0, 0.5), range(2, 202), LIMIT
        )
        report = verify_speed_continuity(sequence, eps=1e-2)
        assert report.envelopes_monotone
        assert report.sandwich_holds
        uppers = [row.upper.c_plus for row in report.rows]
        lowers = [row.lower.c_plus for row in report.rows]
        limit_speed = report.limit_report.c_plus
        assert uppers[0] > uppers[-1] >= limit_speed - 1e-12
        assert lowers[0] < lowers[-1] <= limit_speed + 1e-12

    def test_envelopes_not_monotone(self) -> None:
        """Test that a growing upper envelope speed clears the flag."""
        limit_report = analyze(LIMIT)
        rows = tuple(
            ContinuityRow(float(n), limit_report, 0.0, 0.0, True, upper=analyze(upper), lower=limit_report)
            for n, upper in enumerate([LIMIT, Template(0.9, 1.0, 0.5)], start=1)
        )
        report = ContinuityReport(limit_report, rows, 1e-3, True, True, ApproachSide.MIXED)
        assert not report.envelopes_monotone

    def test_workers_keep_order(self) -> None:
        """Test that parallel solving returns rows in input order with identical values."""
        sequence = decreasing_sequence()
        serial = verify_speed_continuity(sequence, eps=1e-3)
        parallel = verify_speed_continuity(sequence, eps=1e-3, workers=2)
        assert parallel.errors_by_n == serial.errors_by_n


class TestParametrizedTemplate:
    """Tests for path validation."""

    def test_special_model(self) -> None:
        """Test the path [alpha, a, beta + s]."""
        path = special_model(LIMIT_BASE)
        point = path(0.25)
        assert (point.alpha, point.a) == (0.7, 0.2)
        assert point.beta == pytest.approx(0.35)
        assert path.limit.K == pytest.approx(1.0)

    def test_out_of_range_s(self) -> None:
        """Test that s outside [0, s0) raises DomainError."""
        path = special_model(LIMIT_BASE, s0=0.5)
        with pytest.raises(DomainError):
            path(0.5)
        with pytest.raises(DomainError):
            path(-0.1)

    def test_invalid_s0(self) -> None:
        """Test that s0 must be positive."""
        with pytest.raises(DomainError):
            special_model(LIMIT_BASE, s0=0.0)

    def test_limit_off_surface(self) -> None:
        """Test that a limit with alpha + a + beta != 1 fails (S2)."""
        with pytest.raises(HypothesisError, match="S2"):
            special_model(Template(0.5, 1.0, 0.5))

    def test_flat_path(self) -> None:
        """Test that a path whose sum does not increase fails (S1)."""
        with pytest.raises(HypothesisError, match="S1"):
            ParametrizedTemplate.linear(LIMIT_BASE, (0.0, 0.0, 0.0))

    def test_decreasing_weight(self) -> None:
        """Test that a decreasing weight fails (S1)."""
        with pytest.raises(HypothesisError, match="S1"):
            ParametrizedTemplate(lambda s: Template(0.7 - 0.1 * s, 0.2, 0.1 + s), 1.0)

    def test_no_coupling_limit(self) -> None:
        """Test that a limit with alpha + beta = 0 fails (S2)."""
        with pytest.raises(HypothesisError, match="S2"):
            ParametrizedTemplate.linear(Template(0.0, 1.0, 0.0), (0.0, 1.0, 0.0))


class TestLimitingPath:
    """Tests for speeds along s -> 0+."""

    def test_rightward_limit(self) -> None:
        """Test c(s)+ -> alpha - beta = 0.6 with mu*(s) decreasing."""
        report = limiting_speed_path(special_model(LIMIT_BASE), [1e-1, 1e-2, 1e-3, 1e-4], Direction.RIGHTWARD)
        assert report.limit_value == pytest.approx(0.6)
        assert abs(report.points[-1].speed - 0.6) <= 0.05
        assert report.final_gap <= 0.05
        assert report.mu_monotone

    def test_leftward_limit(self) -> None:
        """Test c(s)- -> beta - alpha = -0.6."""
        report = limiting_speed_path(special_model(LIMIT_BASE), default_s_grid(), Direction.LEFTWARD)
        assert report.limit_value == pytest.approx(-0.6)
        assert report.points[-1].speed == pytest.approx(-0.6, abs=0.05)
        assert report.mu_monotone

    def test_leftward_speed_negative_near_limit(self) -> None:
        """Test that alpha > beta + s gives a negative leftward speed for small s."""
        report = limiting_speed_path(special_model(LIMIT_BASE), [1e-2, 1e-3], Direction.LEFTWARD)
        assert all(point.speed < 0 for point in report.points)

    def test_symmetric_limit(self) -> None:
        """Test that alpha = beta gives a vanishing limit speed."""
        report = limiting_speed_path(special_model(Template(0.5, 0.0, 0.5)), default_s_grid(), Direction.RIGHTWARD)
        assert report.limit_value == pytest.approx(0.0)
        assert abs(report.points[-1].speed) <= 0.05

    def test_s_values_validation(self) -> None:
        """Test that s_values must be nonempty, strictly decreasing and inside (0, s0)."""
        path = special_model(LIMIT_BASE)
        with pytest.raises(DomainError):
            limiting_speed_path(path, [], Direction.RIGHTWARD)
        with pytest.raises(DomainError):
            limiting_speed_path(path, [1e-3, 1e-2], Direction.RIGHTWARD)
        with pytest.raises(DomainError):
            limiting_speed_path(path, [2.0, 1e-2], Direction.RIGHTWARD)


class TestEvalG:
    """Tests for G(s, mu) = mu H_mu - H."""

    def test_at_zero_mu(self) -> None:
        """Test G(s, 0) = 1 - (alpha(s) + a(s) + beta(s))."""
        path = special_model(LIMIT_BASE)
        assert eval_G(path, 0.3, 0.0, Direction.RIGHTWARD) == pytest.approx(-0.3)
        assert eval_G(path, 0.0, 0.0, Direction.LEFTWARD) == pytest.approx(0.0, abs=1e-15)

    def test_vanishes_along_minimizer_path(self) -> None:
        """Test |G(s, mu*(s))| <= 1e-8 at every returned point."""
        path = special_model(LIMIT_BASE)
        for direction in Direction:
            report = limiting_speed_path(path, default_s_grid(), direction)
            for point in report.points:
                assert abs(eval_G(path, point.s, point.mu_star, direction)) <= 1e-8

    def test_domain(self) -> None:
        """Test that s outside [0, s0) and negative mu raise DomainError."""
        path = special_model(LIMIT_BASE)
        with pytest.raises(DomainError):
            eval_G(path, 1.5, 0.1, Direction.RIGHTWARD)
        with pytest.raises(DomainError):
            eval_G(path, 0.1, -0.1, Direction.RIGHTWARD)

"""Formatting of results as JSON-ready dicts, CSV tables and run manifests."""

import csv
import json
import math
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, TextIO

import numpy as np

from cnn_spreading.asymptotics import ContinuityReport, LimitPathReport
from cnn_spreading.dispersion import Direction, Template
from cnn_spreading.front_tracker import FrontTrace
from cnn_spreading.lattice_sim import LatticeState
from cnn_spreading.speed_solver import Minimizer, SpeedReport

JSON_SIGNIFICANT_DIGITS = 6
INFINITY_LABEL = "infinity"
MANIFEST_NAME = "manifest.json"

CONVERGENCE_COLUMNS = (
    "n_or_s",
    "c_plus",
    "c_minus",
    "mu_star_plus",
    "mu_star_minus",
    "abs_error_plus",
    "abs_error_minus",
)


def round_significant(value: float | None, digits: int = JSON_SIGNIFICANT_DIGITS) -> float | None:
    """Round to a fixed number of significant digits for JSON output."""
    if value is None:
        return None
    rounded = float(f"{value:.{digits}g}")
    # -0.0 would print as "-0.0"
    return rounded + 0.0


def format_mu_star(minimizer: Minimizer | None) -> float | str | None:
    """Minimizer location as a number, or "infinity" when the infimum is attained at infinity."""
    if minimizer is None:
        return None
    if math.isinf(minimizer.mu_star):
        return INFINITY_LABEL
    return round_significant(minimizer.mu_star)


def format_template(template: Template) -> dict[str, float]:
    return {"alpha": template.alpha, "a": template.a, "beta": template.beta}


def format_speed_report(report: SpeedReport) -> dict[str, Any]:
    """Format a SpeedReport for JSON output.

    Args:
        report: Result of analyze

    Returns:
        Dict with template, both speeds, both minimizers, both sign classes and the (H) flag
    """
    return {
        "template": format_template(report.template),
        "c_plus": round_significant(report.c_plus),
        "c_minus": round_significant(report.c_minus),
        "mu_star_plus": format_mu_star(report.minimizer_plus),
        "mu_star_minus": format_mu_star(report.minimizer_minus),
        "sign_plus": report.sign_plus.value if report.sign_plus else None,
        "sign_minus": report.sign_minus.value if report.sign_minus else None,
        "hypothesis_h": report.hypothesis_h,
    }


def format_estimate(report: SpeedReport, plus: FrontTrace, minus: FrontTrace) -> dict[str, Any]:
    """Format simulated against formula speeds, one column pair per direction.

    Args:
        report: Formula speeds of the simulated template
        plus: Trace of the right front
        minus: Trace of the left front

    Returns:
        Dict with simulated speeds, formula speeds and their absolute gaps
    """
    gap_plus = abs(plus.fitted_speed - report.c_plus) if report.c_plus is not None else None
    gap_minus = abs(minus.fitted_speed - report.c_minus) if report.c_minus is not None else None
    return {
        "template": format_template(report.template),
        "c_plus_sim": round_significant(plus.fitted_speed),
        "c_minus_sim": round_significant(minus.fitted_speed),
        "c_plus_formula": round_significant(report.c_plus),
        "c_minus_formula": round_significant(report.c_minus),
        "abs_gap_plus": round_significant(gap_plus),
        "abs_gap_minus": round_significant(gap_minus),
        "fit_residual_plus": round_significant(plus.fit_residual),
        "fit_residual_minus": round_significant(minus.fit_residual),
    }


def format_error(error: Exception) -> dict[str, Any]:
    """Machine-readable error object carrying the exception type and message."""
    payload: dict[str, Any] = {"type": type(error).__name__, "message": str(error)}
    for name in ("field", "line", "column"):
        value = getattr(error, name, None)
        if value is not None:
            payload[name] = value
    return {"error": payload}


def to_json(payload: dict[str, Any]) -> str:
    return json.dumps(payload, ensure_ascii=False, indent=2)


def _cell(value: float | None) -> str:
    # repr gives the shortest string that round-trips the double
    if value is None:
        return ""
    value = float(value)
    if math.isinf(value):
        return INFINITY_LABEL if value > 0 else f"-{INFINITY_LABEL}"
    return repr(value)


def write_snapshots_csv(snapshots: Iterable[LatticeState], stream: TextIO) -> None:
    """Write snapshots as "t,i,x" rows, ascending in t and then in i."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(("t", "i", "x"))
    for state in snapshots:
        t = _cell(state.time)
        for i, x in zip(state.indices.tolist(), state.values.tolist(), strict=True):
            writer.writerow((t, i, _cell(x)))


def write_trace_csv(trace: FrontTrace, stream: TextIO) -> None:
    """Write a front trace as "t,position" rows followed by the fitted speed comment line."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(("t", "position"))
    for t, position in trace.samples:
        writer.writerow((_cell(t), _cell(position)))
    stream.write(f"# fitted_speed={_cell(trace.fitted_speed)} residual={_cell(trace.fit_residual)}\n")


def write_phi_curve_csv(mu: np.ndarray, phi: np.ndarray, stream: TextIO) -> None:
    """Write a sampled Phi curve as "mu,phi" rows."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(("mu", "phi"))
    for m, p in zip(mu.tolist(), phi.tolist(), strict=True):
        writer.writerow((_cell(m), _cell(p)))


def continuity_rows(report: ContinuityReport) -> list[tuple[float | None, ...]]:
    """Convergence table rows of a template sequence, one per index n."""
    rows = []
    for row in report.rows:
        minimizer_plus = row.report.minimizer_plus
        minimizer_minus = row.report.minimizer_minus
        rows.append(
            (
                row.index,
                row.c_plus,
                row.c_minus,
                minimizer_plus.mu_star if minimizer_plus else None,
                minimizer_minus.mu_star if minimizer_minus else None,
                row.abs_error_plus,
                row.abs_error_minus,
            )
        )
    return rows


def limit_path_rows(plus: LimitPathReport, minus: LimitPathReport) -> list[tuple[float | None, ...]]:
    """Convergence table rows of a limiting path, one per s, errors measured against Psi(0, 0)."""
    if plus.direction is not Direction.RIGHTWARD or minus.direction is not Direction.LEFTWARD:
        raise ValueError("Expected a rightward and a leftward path report")
    rows = []
    for p, m in zip(plus.points, minus.points, strict=True):
        rows.append(
            (
                p.s,
                p.speed,
                m.speed,
                p.mu_star,
                m.mu_star,
                abs(p.speed - plus.limit_value),
                abs(m.speed - minus.limit_value),
            )
        )
    return rows


def write_convergence_csv(rows: Sequence[tuple[float | None, ...]], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CONVERGENCE_COLUMNS)
    for row in rows:
        writer.writerow(tuple(_cell(value) for value in row))


@dataclass
class RunManifest:
    """Record of one CLI invocation, written next to its outputs.

    Attributes:
        command: Subcommand name
        parameters: Resolved parameters (JSON-serializable)
        output_paths: Files written by the run
        tool_version: Package version
        wall_time: Elapsed seconds
    """

    command: str
    parameters: dict[str, Any]
    tool_version: str
    output_paths: list[str] = field(default_factory=list)
    wall_time: float = 0.0

    def write(self, directory: Path) -> Path:
        """Write manifest.json into directory and return its path."""
        path = directory / MANIFEST_NAME
        path.write_text(json.dumps(asdict(self), ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
        return path

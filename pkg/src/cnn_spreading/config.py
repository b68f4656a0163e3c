"""Resolution of user input: template strings, JSON config files and sweep specs."""

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from cnn_spreading.asymptotics import (
    DEFAULT_LIMIT_TOLERANCE,
    ParametrizedTemplate,
    TemplateSequence,
    default_s_grid,
    default_sequence_indices,
)
from cnn_spreading.dispersion import DomainError, Template
from cnn_spreading.presets import PRESETS, get_preset

# Direct template input: "alpha,a,beta" with optional spaces or surrounding brackets
TRIPLE_PATTERN = re.compile(
    r"^\s*\[?\s*([-+]?\d*\.?\d+(?:[eE][-+]?\d+)?)\s*,\s*([-+]?\d*\.?\d+(?:[eE][-+]?\d+)?)\s*,"
    r"\s*([-+]?\d*\.?\d+(?:[eE][-+]?\d+)?)\s*\]?\s*$"
)

SWEEP_MODES = ("sequence", "limit")
DEFAULT_SEQUENCE_EPS = 1e-3
DEFAULT_LIMIT_EPS = 0.05


class ConfigError(Exception):
    """Raised when a template string, config file or sweep spec is invalid.

    Attributes:
        field: Offending field path such as entries[3][1], if known
        line: Line of a JSON syntax error, if any
        column: Column of a JSON syntax error, if any
    """

    def __init__(
        self, message: str, field: str | None = None, line: int | None = None, column: int | None = None
    ) -> None:
        self.field = field
        self.line = line
        self.column = column
        location = []
        if field is not None:
            location.append(f"field {field}")
        if line is not None:
            location.append(f"line {line}, column {column}")
        super().__init__(f"{message} ({'; '.join(location)})" if location else message)


def resolve_template(spec: str) -> Template:
    """Resolve a template string to a Template.

    Supports two input formats:
    1. Direct weights: "0.5,1,0.5" or "[0.5, 1, 0.5]"
    2. Known preset name: "row1", "diminish-right", etc.

    Args:
        spec: Template string

    Returns:
        Template

    Raises:
        ConfigError: If the string matches neither format or a weight is invalid
    """
    spec = spec.strip()

    if not spec:
        raise ConfigError("Template cannot be empty")

    match = TRIPLE_PATTERN.match(spec)
    if match:
        try:
            return Template(*(float(group) for group in match.groups()))
        except DomainError as e:
            raise ConfigError(str(e), field="template") from e

    template = get_preset(spec)
    if template is not None:
        return template

    names = ", ".join(sorted(PRESETS))
    raise ConfigError(f"Template '{spec}' is neither 'alpha,a,beta' nor a known preset ({names})", field="template")


def _read_json(path: Path) -> object:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read {path}: {e}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON in {path}: {e.msg}", line=e.lineno, column=e.colno) from e


def load_config(path: Path, allowed: set[str]) -> dict[str, Any]:
    """Load a JSON object of option overrides.

    Keys may use dashes or underscores; they are normalized to underscores.

    Args:
        path: Config file path
        allowed: Option names (underscore form) the command accepts

    Returns:
        Mapping of option name to value

    Raises:
        ConfigError: On unreadable or malformed JSON, a non-object document or an unknown key
    """
    data = _read_json(path)
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a JSON object", field="$")

    overrides = {}
    for key, value in data.items():
        name = key.replace("-", "_")
        if name not in allowed:
            raise ConfigError(f"Unknown option '{key}'", field=key)
        overrides[name] = value
    return overrides


def merge_config(flags: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    """Return flag values with config-file values taking precedence."""
    merged = dict(flags)
    merged.update(overrides)
    return merged


def _number(value: object, field: str, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, int | float) or not math.isfinite(value):
        raise ConfigError(f"Expected a finite number, got {value!r}", field=field)
    if positive and value <= 0:
        raise ConfigError(f"Expected a positive number, got {value!r}", field=field)
    return float(value)


def _template(value: object, field: str) -> Template:
    if isinstance(value, str):
        try:
            return resolve_template(value)
        except ConfigError as e:
            raise ConfigError(str(e), field=field) from e
    if not isinstance(value, list) or len(value) != 3:
        raise ConfigError("Expected a template [alpha, a, beta] or a preset name", field=field)
    weights = [_number(item, f"{field}[{k}]") for k, item in enumerate(value)]
    for k, weight in enumerate(weights):
        if weight < 0:
            raise ConfigError(f"Template weights must be nonnegative, got {weight!r}", field=f"{field}[{k}]")
    return Template(*weights)


def _list(value: object, field: str) -> list[Any]:
    if not isinstance(value, list) or not value:
        raise ConfigError("Expected a nonempty list", field=field)
    return value


@dataclass(frozen=True)
class SweepSpec:
    """Validated sweep document.

    Attributes:
        mode: "sequence" or "limit"
        eps: Tolerance the final grid point must meet
        sequence: Template sequence (sequence mode)
        path: Template path (limit mode)
        s_values: Decreasing path parameters (limit mode)
    """

    mode: str
    eps: float
    sequence: TemplateSequence | None = None
    path: ParametrizedTemplate | None = None
    s_values: tuple[float, ...] = ()


def _sequence_spec(data: dict[str, Any], eps: float) -> SweepSpec:
    limit = _template(data.get("limit"), "limit")
    tolerance = _number(data.get("tolerance", DEFAULT_LIMIT_TOLERANCE), "tolerance", positive=True)

    if "entries" in data:
        raw = _list(data["entries"], "entries")
        entries = tuple(_template(item, f"entries[{k}]") for k, item in enumerate(raw))
        indices: tuple[float, ...] = ()
        if "indices" in data:
            raw_indices = _list(data["indices"], "indices")
            indices = tuple(_number(n, f"indices[{k}]") for k, n in enumerate(raw_indices))
            if len(indices) != len(entries):
                raise ConfigError(f"{len(indices)} indices for {len(entries)} entries", field="indices")
    elif "rates" in data:
        # entries limit + rates / n
        raw_rates = _list(data["rates"], "rates")
        if len(raw_rates) != 3:
            raise ConfigError("Expected three rates", field="rates")
        rates = [_number(r, f"rates[{k}]") for k, r in enumerate(raw_rates)]
        raw_indices = data.get("indices", default_sequence_indices())
        indices = tuple(
            _number(n, f"indices[{k}]", positive=True) for k, n in enumerate(_list(raw_indices, "indices"))
        )
        weights = [(limit.alpha + rates[0] / n, limit.a + rates[1] / n, limit.beta + rates[2] / n) for n in indices]
        for k, triple in enumerate(weights):
            if min(triple) < 0:
                raise ConfigError(f"Entry {triple} has a negative weight", field=f"indices[{k}]")
        entries = tuple(Template(*triple) for triple in weights)
    else:
        raise ConfigError("Sequence sweeps need 'entries' or 'rates'", field="entries")

    try:
        sequence = TemplateSequence(entries, limit, indices, tolerance)
    except DomainError as e:
        raise ConfigError(str(e), field="limit") from e
    return SweepSpec(mode="sequence", eps=eps, sequence=sequence)


def _limit_spec(data: dict[str, Any], eps: float) -> SweepSpec:
    base = _template(data.get("base"), "base")
    raw_rates = data.get("rates", [0.0, 0.0, 1.0])
    if not isinstance(raw_rates, list) or len(raw_rates) != 3:
        raise ConfigError("Expected three rates", field="rates")
    rates = tuple(_number(r, f"rates[{k}]") for k, r in enumerate(raw_rates))
    for k, rate in enumerate(rates):
        if rate < 0:
            raise ConfigError(f"Rates must be nonnegative, got {rate!r}", field=f"rates[{k}]")
    s0 = _number(data.get("s0", 1.0), "s0", positive=True)

    raw_s = data.get("s_values", default_s_grid())
    s_values = tuple(_number(s, f"s_values[{k}]", positive=True) for k, s in enumerate(_list(raw_s, "s_values")))
    for k in range(1, len(s_values)):
        if s_values[k] >= s_values[k - 1]:
            raise ConfigError("s_values must be strictly decreasing", field=f"s_values[{k}]")
    if s_values[0] >= s0:
        raise ConfigError(f"s_values must lie below s0={s0:g}", field="s_values[0]")

    path = ParametrizedTemplate.linear(base, rates, s0=s0, name=f"sweep{base}")
    return SweepSpec(mode="limit", eps=eps, path=path, s_values=s_values)


def load_sweep_spec(path: Path) -> SweepSpec:
    """Load and validate a sweep document.

    A sequence sweep declares "limit" plus either explicit "entries" (with optional
    "indices") or "rates", which generate entries limit + rates / n over "indices"
    (default n = 2^k, k = 0..14). A limit sweep declares a "base" template with
    alpha + a + beta = 1, optional "rates" (default [0, 0, 1]), "s0" and "s_values".

    Args:
        path: JSON file path

    Returns:
        SweepSpec

    Raises:
        ConfigError: With line and column for syntax errors, with a field path otherwise
        HypothesisError: If a limit-mode path violates its assumptions
    """
    data = _read_json(path)
    if not isinstance(data, dict):
        raise ConfigError("Sweep spec must be a JSON object", field="$")

    mode = data.get("mode")
    if mode not in SWEEP_MODES:
        raise ConfigError(f"mode must be one of {', '.join(SWEEP_MODES)}, got {mode!r}", field="mode")

    default_eps = DEFAULT_SEQUENCE_EPS if mode == "sequence" else DEFAULT_LIMIT_EPS
    eps = _number(data.get("eps", default_eps), "eps", positive=True)

    if mode == "sequence":
        return _sequence_spec(data, eps)
    return _limit_spec(data, eps)

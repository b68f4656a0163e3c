"""Method-of-lines integration of the cellular neural network lattice on a finite window."""

import logging
import math
from dataclasses import dataclass

import numpy as np

from cnn_spreading.dispersion import Template

logger = logging.getLogger(__name__)

DEFAULT_DT = 0.01
DEFAULT_T_END = 60.0
DEFAULT_INIT_HALF_WIDTH = 5
DEFAULT_SNAPSHOT_STRIDE = 10
MAX_DT = 0.1
MAX_STORED_VALUES = 10**8
WINDOW_MARGIN = 10


class ConfigurationError(ValueError):
    """Raised when a simulation configuration breaks its invariants."""


class NumericalBlowUpError(ArithmeticError):
    """Raised when the integration produces a non-finite value."""


def output_f(u: float | np.ndarray) -> float | np.ndarray:
    """Piecewise-linear cell output f(u) = (|u + 1| - |u - 1|) / 2, i.e. u clipped to [-1, 1]."""
    return np.clip(u, -1.0, 1.0)


def _required_half_width(template: Template, init_half_width: int, t_end: float) -> int:
    """Smallest window that no front can reach before t_end (coupling-magnitude speed bound)."""
    return init_half_width + math.ceil((template.K + 2.0) * t_end)


@dataclass(frozen=True)
class SimConfig:
    """Simulation protocol for one template.

    Attributes:
        template: Cloning template
        half_width: Window half width L; sites run over [-L, L]
        dt: Runge-Kutta time step
        t_end: Final time (an integer multiple of dt)
        init_half_width: Initial plateau covers |i| <= init_half_width
        init_level: Plateau height in (0, K]; defaults to K
        snapshot_stride: Steps between stored snapshots
        linearized: Integrate the linearization (f replaced by the identity)
    """

    template: Template
    half_width: int
    dt: float = DEFAULT_DT
    t_end: float = DEFAULT_T_END
    init_half_width: int = DEFAULT_INIT_HALF_WIDTH
    init_level: float | None = None
    snapshot_stride: int = DEFAULT_SNAPSHOT_STRIDE
    linearized: bool = False

    def __post_init__(self) -> None:
        if self.init_level is None:
            object.__setattr__(self, "init_level", self.template.K)
        if not 0 < self.dt <= MAX_DT:
            raise ConfigurationError(f"dt must lie in (0, {MAX_DT}], got {self.dt!r}")
        if not self.t_end > 0:
            raise ConfigurationError(f"t_end must be positive, got {self.t_end!r}")
        if abs(self.t_end / self.dt - round(self.t_end / self.dt)) > 1e-9 * (self.t_end / self.dt):
            raise ConfigurationError(f"t_end={self.t_end:g} is not a multiple of dt={self.dt:g}")
        if self.init_half_width < 0:
            raise ConfigurationError(f"init_half_width must be nonnegative, got {self.init_half_width!r}")
        if not 0 < self.init_level <= self.template.K:
            raise ConfigurationError(f"init_level must lie in (0, K={self.template.K:g}], got {self.init_level!r}")
        if self.snapshot_stride < 1:
            raise ConfigurationError(f"snapshot_stride must be at least 1, got {self.snapshot_stride!r}")

        required = _required_half_width(self.template, self.init_half_width, self.t_end)
        if self.half_width <= required:
            raise ConfigurationError(
                f"half_width={self.half_width} too small: fronts may reach the boundary, need more than {required}"
            )
        stored = self.snapshot_count * self.site_count
        if stored > MAX_STORED_VALUES:
            raise ConfigurationError(f"{stored} stored values exceed the limit of {MAX_STORED_VALUES}")

    @classmethod
    def auto(
        cls,
        template: Template,
        dt: float = DEFAULT_DT,
        t_end: float = DEFAULT_T_END,
        init_half_width: int = DEFAULT_INIT_HALF_WIDTH,
        **kwargs: object,
    ) -> "SimConfig":
        """Configuration whose window is the smallest admissible one plus WINDOW_MARGIN sites."""
        half_width = _required_half_width(template, init_half_width, t_end) + WINDOW_MARGIN
        return cls(template, half_width, dt=dt, t_end=t_end, init_half_width=init_half_width, **kwargs)

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.dt)

    @property
    def site_count(self) -> int:
        return 2 * self.half_width + 1

    @property
    def snapshot_count(self) -> int:
        # t = 0, every stride, and t_end when the stride does not divide the step count
        count = self.n_steps // self.snapshot_stride + 1
        return count + (1 if self.n_steps % self.snapshot_stride else 0)


@dataclass(frozen=True)
class LatticeState:
    """Snapshot of the lattice on the window [-L, L].

    Attributes:
        time: Time stamp
        values: Read-only array of x_i for i = -L..L
        template: Template that generated the state, when known
    """

    time: float
    values: np.ndarray
    template: Template | None = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size % 2 == 0:
            raise ConfigurationError("values must be a one-dimensional array of odd length 2L + 1")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def half_width(self) -> int:
        return (self.values.size - 1) // 2

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.half_width, self.half_width + 1)

    def at(self, i: int) -> float:
        """Value at site i (0 outside the window)."""
        if abs(i) > self.half_width:
            return 0.0
        return float(self.values[i + self.half_width])


def _rhs(x: np.ndarray, template: Template, linearized: bool) -> np.ndarray:
    """-x_i + alpha f(x_{i-1}) + a f(x_i) + beta f(x_{i+1}) with zero ghosts outside the window."""
    y = x if linearized else output_f(x)
    padded = np.pad(y, 1)
    return -x + template.alpha * padded[:-2] + template.a * y + template.beta * padded[2:]


def _rk4(x: np.ndarray, dt: float, template: Template, linearized: bool) -> np.ndarray:
    k1 = _rhs(x, template, linearized)
    k2 = _rhs(x + 0.5 * dt * k1, template, linearized)
    k3 = _rhs(x + 0.5 * dt * k2, template, linearized)
    k4 = _rhs(x + dt * k3, template, linearized)
    x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x_next)):
        raise NumericalBlowUpError("Runge-Kutta step produced a non-finite value")
    return x_next


def step(state: LatticeState, config: SimConfig) -> LatticeState:
    """Advance every site by one classical fourth-order Runge-Kutta step.

    Args:
        state: Current snapshot, on the window of config
        config: Simulation configuration supplying template, dt and model variant

    Returns:
        New snapshot at time state.time + dt

    Raises:
        ConfigurationError: If the state does not live on the configured window
        NumericalBlowUpError: If a non-finite value appears
    """
    if state.half_width != config.half_width:
        raise ConfigurationError(f"State window {state.half_width} differs from configured {config.half_width}")
    values = _rk4(state.values, config.dt, config.template, config.linearized)
    return LatticeState(state.time + config.dt, values, config.template)


def initial_values(config: SimConfig) -> np.ndarray:
    """Indicator profile: init_level on |i| <= init_half_width, 0 elsewhere."""
    indices = np.arange(-config.half_width, config.half_width + 1)
    return np.where(np.abs(indices) <= config.init_half_width, config.init_level, 0.0)


def simulate(config: SimConfig, initial: np.ndarray | None = None) -> list[LatticeState]:
    """Integrate the lattice from t = 0 to t_end.

    Args:
        config: Simulation configuration (validated at construction)
        initial: Optional initial values on [-L, L]; defaults to the indicator profile

    Returns:
        Snapshots every snapshot_stride steps, including t = 0 and t = t_end

    Raises:
        ConfigurationError: If the initial data do not match the window
        NumericalBlowUpError: If a non-finite value appears
    """
    x = initial_values(config) if initial is None else np.array(initial, dtype=float)
    if x.shape != (config.site_count,):
        raise ConfigurationError(f"Initial data need {config.site_count} sites, got shape {x.shape}")

    template = config.template
    snapshots = [LatticeState(0.0, x, template)]
    L = config.half_width
    logger.debug("Simulating %s on [-%d, %d] for %d steps", template, L, L, config.n_steps)
    for k in range(1, config.n_steps + 1):
        x = _rk4(x, config.dt, template, config.linearized)
        if k % config.snapshot_stride == 0 or k == config.n_steps:
            snapshots.append(LatticeState(k * config.dt, x, template))
    return snapshots

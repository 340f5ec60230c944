"""Analyzer geometry and intensity formation at the polarizing beam splitters."""

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Tuple, Union

import numpy as np

from .source_model import (
    EmissionEvent,
    SourceConstraints,
    WaveComponent,
    event_wave_components,
)
from ..utils.logger import get_logger


logger = get_logger()

ArrayLike = Union[float, np.ndarray]

MIN_AVERAGING_PERIODS = 100


class Port(str, Enum):
    """Analyzer output: transmitted (n) or reflected (p)."""

    N = "n"
    P = "p"


class Side(str, Enum):
    """Measurement station: A analyzes beam 1, B analyzes beam 2."""

    A = "A"
    B = "B"

    @property
    def beam(self) -> int:
        return 1 if self is Side.A else 2


def canonical_angle(theta: float) -> float:
    """Map an analyzer angle to [0, pi); polarizers are pi-periodic."""
    value = math.fmod(theta, math.pi)
    if value < 0.0:
        value += math.pi
    if value >= math.pi:
        value = 0.0
    return value


@dataclass(frozen=True)
class AnalyzerSetting:
    """Analyzer angles on side A (theta1) and side B (theta2), stored canonically."""

    theta1: float
    theta2: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.theta1) and math.isfinite(self.theta2)):
            raise ValueError(f"Analyzer angles must be finite: ({self.theta1}, {self.theta2})")
        object.__setattr__(self, "theta1", canonical_angle(self.theta1))
        object.__setattr__(self, "theta2", canonical_angle(self.theta2))

    @classmethod
    def from_delta(cls, delta: float, theta1: float = 0.0) -> "AnalyzerSetting":
        """Setting with theta1 - theta2 = delta."""
        return cls(theta1, theta1 - delta)

    @property
    def delta(self) -> float:
        return self.theta1 - self.theta2

    def angle(self, side: Side) -> float:
        return self.theta1 if side is Side.A else self.theta2

    def label(self) -> str:
        return f"{self.theta1!r}:{self.theta2!r}"


class IntensityQuad(NamedTuple):
    """Analyzer-output intensities (units of hv)."""

    i1n: ArrayLike
    i1p: ArrayLike
    i2n: ArrayLike
    i2p: ArrayLike

    def side_total(self, side: Side) -> ArrayLike:
        return self.i1n + self.i1p if side is Side.A else self.i2n + self.i2p


@dataclass(frozen=True)
class FieldProbe:
    """Where and when a field is evaluated; ``time`` may be an array of instants."""

    time: ArrayLike
    position: float

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.time)) or not math.isfinite(self.position):
            raise ValueError("FieldProbe time and position must be finite")


def analyzer_axes(theta: float) -> Tuple[np.ndarray, np.ndarray]:
    """Unit vectors of the transmitted (n) and reflected (p) directions."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([c, s]), np.array([-s, c])


def project_amplitudes(u_h: ArrayLike, u_v: ArrayLike, theta: float) -> Tuple[ArrayLike, ArrayLike]:
    """Project (u_H, u_V) onto the analyzer axes: returns (U_n, U_p)."""
    c, s = math.cos(theta), math.sin(theta)
    return u_h * c + u_v * s, -u_h * s + u_v * c


def instantaneous_intensity(
    h: WaveComponent,
    v: WaveComponent,
    theta: float,
    probe: FieldProbe,
    port: Port = Port.N,
) -> ArrayLike:
    """Instantaneous analyzer-output intensity before any averaging.

    Squared projected cosine fields, written out as the two Malus terms and
    the H-V cross term.
    """
    fh = h.field_value(probe.time, probe.position)
    fv = v.field_value(probe.time, probe.position)
    c2, s2 = math.cos(theta) ** 2, math.sin(theta) ** 2
    sin2 = math.sin(2.0 * theta)
    if Port(port) is Port.N:
        return fh**2 * c2 + fv**2 * s2 + fh * fv * sin2
    return fh**2 * s2 + fv**2 * c2 - fh * fv * sin2


def intensity_quad(
    i1h: ArrayLike,
    i1v: ArrayLike,
    i2h: ArrayLike,
    i2v: ArrayLike,
    cos_phase: ArrayLike,
    setting: AnalyzerSetting,
) -> IntensityQuad:
    """Beat-averaged four-port intensities; works on scalars or per-event arrays.

    Interference signs are (+, -, -, +) for (1n, 1p, 2n, 2p): the pi waveplate
    shift flips the beam-2 beat.
    """
    c1, s1 = math.cos(setting.theta1) ** 2, math.sin(setting.theta1) ** 2
    c2, s2 = math.cos(setting.theta2) ** 2, math.sin(setting.theta2) ** 2
    beat1 = np.sqrt(i1h * i1v) * cos_phase * math.sin(2.0 * setting.theta1)
    beat2 = np.sqrt(i2h * i2v) * cos_phase * math.sin(2.0 * setting.theta2)
    return IntensityQuad(
        i1n=i1h * c1 + i1v * s1 + beat1,
        i1p=i1h * s1 + i1v * c1 - beat1,
        i2n=i2h * c2 + i2v * s2 - beat2,
        i2p=i2h * s2 + i2v * c2 + beat2,
    )


def beat_averaged_intensities(event: EmissionEvent, setting: AnalyzerSetting) -> IntensityQuad:
    """Four-port intensities of one event after dropping optical-frequency terms."""
    i1h, i1v, i2h, i2v = event.intensities
    return intensity_quad(i1h, i1v, i2h, i2v, math.cos(event.relative_phase), setting)


def _window_mean_cos(phase0: float, rate: float, window: float) -> float:
    """Mean of cos(phase0 + rate t) over t in [0, window]."""
    if rate == 0.0:
        return math.cos(phase0)
    return (math.sin(phase0 + rate * window) - math.sin(phase0)) / (rate * window)


def time_average_check(
    event: EmissionEvent,
    setting: AnalyzerSetting,
    n_periods: Union[int, float],
    constraints: Optional[SourceConstraints] = None,
    samples_per_period: int = 32,
) -> float:
    """Compare the numerically time-averaged instantaneous intensity with ``intensity_quad``.

    The instantaneous intensity of every port is sampled at midpoints over
    ``n_periods`` whole periods of the mean optical frequency of its beam and
    averaged. For a degenerate source the reference is
    ``beat_averaged_intensities(event, setting)`` itself. With detuned beams
    the beat drifts across the window, so the window mean of the beat cosine
    replaces ``cos(relative_phase)`` in ``intensity_quad``.

    Args:
        event: Emission event
        setting: Analyzer setting
        n_periods: Whole number of optical periods (>= 100)
        constraints: Source constraints (defaults to ``SourceConstraints()``)
        samples_per_period: Quadrature points per optical period

    Returns:
        Largest absolute residual over the four ports

    Raises:
        ValueError: If ``n_periods`` is not a whole number >= 100
    """
    if isinstance(n_periods, float):
        if not n_periods.is_integer():
            raise ValueError(
                f"n_periods = {n_periods}: averaging is only valid over whole optical periods"
            )
        n_periods = int(n_periods)
    if n_periods < MIN_AVERAGING_PERIODS:
        raise ValueError(f"n_periods must be >= {MIN_AVERAGING_PERIODS}, got {n_periods}")
    if samples_per_period < 8:
        raise ValueError("samples_per_period must be >= 8")

    constraints = constraints or SourceConstraints()
    fields = event_wave_components(constraints, event)
    x = constraints.detector_distance
    i1h, i1v, i2h, i2v = event.intensities
    degenerate = all(
        h.angular_frequency == v.angular_frequency
        for h, v in (fields.components(1), fields.components(2))
    )
    if degenerate:
        beat_averaged = beat_averaged_intensities(event, setting)

    residual = 0.0
    for side, theta in ((1, setting.theta1), (2, setting.theta2)):
        h, v = fields.components(side)
        mean_omega = 0.5 * (h.angular_frequency + v.angular_frequency)
        period = 2.0 * math.pi / mean_omega
        step = period / samples_per_period
        times = (np.arange(n_periods * samples_per_period) + 0.5) * step
        probe = FieldProbe(times, x)

        if degenerate:
            quad = beat_averaged
        else:
            # beam 2 carries the waveplate pi; intensity_quad applies it as a sign
            phase0 = h.phase_offset(x) - v.phase_offset(x) - (math.pi if side == 2 else 0.0)
            cos_mean = _window_mean_cos(
                phase0, h.angular_frequency - v.angular_frequency, n_periods * period
            )
            quad = intensity_quad(i1h, i1v, i2h, i2v, cos_mean, setting)
        references = {
            Port.N: quad.i1n if side == 1 else quad.i2n,
            Port.P: quad.i1p if side == 1 else quad.i2p,
        }
        for port, reference in references.items():
            numeric = float(np.mean(instantaneous_intensity(h, v, theta, probe, port)))
            residual = max(residual, abs(numeric - float(reference)))

    logger.debug(f"time_average_check: n_periods={n_periods} residual={residual:.3e}")
    return residual

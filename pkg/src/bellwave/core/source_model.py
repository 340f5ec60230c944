"""SPDC source model: wave-pair phases, frequencies, QED intensities and event sampling.

The source emits one photon pair per event, either 1H-2V or 1V-2H with
probability one half. The photon-carrying waves have intensity 1 and the
accompanying photon-empty (vacuum) waves intensity 1/2, in units of hv.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, FiniteFloat

from ..utils.logger import get_logger


logger = get_logger()

TWO_PI = 2.0 * math.pi
SPEED_OF_LIGHT = 299_792_458.0  # m/s
PHOTON_INTENSITY = 1.0
VACUUM_INTENSITY = 0.5
MAX_FRACTIONAL_DETUNING = 0.007
PHASE_TOLERANCE = 1e-12
DEFAULT_PUMP_WAVELENGTH = 351.1e-9  # m
DEFAULT_PUMP_FREQUENCY = TWO_PI * SPEED_OF_LIGHT / DEFAULT_PUMP_WAVELENGTH


class ConstraintViolationError(ValueError):
    """Raised when source constraints forbid deriving beam-2 quantities."""


def normalize_phase(phase: float) -> float:
    """Map a phase to [0, 2pi). Idempotent."""
    value = math.fmod(phase, TWO_PI)
    if value < 0.0:
        value += TWO_PI
    if value >= TWO_PI:
        value = 0.0
    return value


def wrap_to_pi(angle: float) -> float:
    """Map an angle to (-pi, pi]."""
    value = math.pi - normalize_phase(math.pi - angle)
    return value


def wavelength_for(angular_frequency: float) -> float:
    """Vacuum wavelength of light at the given angular frequency."""
    return TWO_PI * SPEED_OF_LIGHT / angular_frequency


@dataclass(frozen=True)
class WaveComponent:
    """One polarization component u = |u| cos(phase + w t + 2 pi x / lambda)."""

    magnitude: float
    phase: float
    angular_frequency: float
    wavelength: float

    def __post_init__(self) -> None:
        for name in ("magnitude", "phase", "angular_frequency", "wavelength"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"WaveComponent.{name} must be finite")
        if self.magnitude < 0:
            raise ValueError(f"WaveComponent.magnitude must be >= 0, got {self.magnitude}")
        if self.wavelength <= 0:
            raise ValueError(f"WaveComponent.wavelength must be > 0, got {self.wavelength}")
        object.__setattr__(self, "phase", normalize_phase(self.phase))

    @classmethod
    def from_intensity(cls, intensity: float, phase: float, angular_frequency: float) -> "WaveComponent":
        """Build a component whose short-time average |u|^2/2 equals ``intensity``."""
        return cls(
            magnitude=math.sqrt(2.0 * intensity),
            phase=phase,
            angular_frequency=angular_frequency,
            wavelength=wavelength_for(angular_frequency),
        )

    @property
    def inverse_wavelength(self) -> float:
        return 1.0 / self.wavelength

    @property
    def intensity(self) -> float:
        """Average intensity |u|^2 / 2."""
        return self.magnitude**2 / 2.0

    def phase_offset(self, position: float) -> float:
        """Time-independent part of the argument, phase + 2 pi x / lambda, in [0, 2pi)."""
        return normalize_phase(self.phase + TWO_PI * position * self.inverse_wavelength)

    def argument(self, time, position: float):
        return self.phase_offset(position) + self.angular_frequency * np.asarray(time, dtype=float)

    def field_value(self, time, position: float):
        """Instantaneous field value at (t, x); accepts scalar or array time."""
        return self.magnitude * np.cos(self.argument(time, position))


class SourceConstraints(BaseModel):
    """Phase-matching and energy-conservation parameters of the source.

    ``const_sum`` never reaches an observable; it is exposed for completeness.
    """

    model_config = ConfigDict(frozen=True)

    const_sum: FiniteFloat = 0.0
    delta_2h: FiniteFloat = math.pi
    delta_2v: FiniteFloat = 0.0
    pump_frequency: FiniteFloat = Field(default=DEFAULT_PUMP_FREQUENCY, gt=0)
    beam1_phases: Tuple[FiniteFloat, FiniteFloat] = (0.0, 0.0)
    beam1_frequencies: Optional[Tuple[FiniteFloat, FiniteFloat]] = None
    detector_distance: FiniteFloat = 1.0
    fractional_detuning: FiniteFloat = Field(default=0.0, ge=0.0, lt=1.0)
    entangled_source: bool = True

    def beam1_angular_frequencies(self) -> Tuple[float, float]:
        """(w1H, w1V): explicit values, or split symmetrically around w_p/2 by the detuning."""
        if self.beam1_frequencies is not None:
            return self.beam1_frequencies
        half = self.pump_frequency / 2.0
        d = self.fractional_detuning
        return half * (1.0 + d), half * (1.0 - d)

    def measured_detuning(self) -> float:
        """|w1H - w1V| / (w1H + w1V)."""
        w1h, w1v = self.beam1_angular_frequencies()
        total = w1h + w1v
        return abs(w1h - w1v) / total if total else math.inf

    def numeric_values(self) -> List[Tuple[str, float]]:
        values = [
            ("const_sum", self.const_sum),
            ("delta_2h", self.delta_2h),
            ("delta_2v", self.delta_2v),
            ("pump_frequency", self.pump_frequency),
            ("theta_1h", self.beam1_phases[0]),
            ("theta_1v", self.beam1_phases[1]),
            ("detector_distance", self.detector_distance),
            ("fractional_detuning", self.fractional_detuning),
        ]
        if self.beam1_frequencies is not None:
            values += [("omega_1h", self.beam1_frequencies[0]), ("omega_1v", self.beam1_frequencies[1])]
        return values


@dataclass(frozen=True)
class ConstraintCheck:
    """Outcome of one source constraint."""

    name: str
    passed: bool
    residual: float
    tolerance: float
    severity: str = "error"  # "error" or "warning"
    message: str = ""


@dataclass(frozen=True)
class ValidationReport:
    """Per-constraint pass/fail list; warnings do not fail the report."""

    checks: Tuple[ConstraintCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.severity == "error")

    @property
    def failures(self) -> List[ConstraintCheck]:
        return [c for c in self.checks if not c.passed and c.severity == "error"]

    @property
    def warnings(self) -> List[ConstraintCheck]:
        return [c for c in self.checks if not c.passed and c.severity == "warning"]

    def get(self, name: str) -> ConstraintCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)


def _frequency_tolerance(c: SourceConstraints) -> float:
    return PHASE_TOLERANCE * max(1.0, c.pump_frequency)


def _phase_shift_residual(c: SourceConstraints) -> float:
    return abs(wrap_to_pi(c.delta_2h - c.delta_2v - math.pi))


def validate_constraints(c: SourceConstraints) -> ValidationReport:
    """Check the phase-matching and energy-conservation conditions.

    Args:
        c: Source constraints

    Returns:
        Report listing every constraint with its residual

    Raises:
        ValueError: If any numeric field is NaN or infinite
    """
    for name, value in c.numeric_values():
        if not math.isfinite(value):
            raise ValueError(f"Source constraint '{name}' is not finite: {value}")

    checks: List[ConstraintCheck] = []

    residual = _phase_shift_residual(c)
    if c.entangled_source:
        checks.append(ConstraintCheck(
            name="phase_shift_difference",
            passed=residual <= PHASE_TOLERANCE,
            residual=residual,
            tolerance=PHASE_TOLERANCE,
            message="delta_2h - delta_2v = pi",
        ))
    else:
        checks.append(ConstraintCheck(
            name="phase_shift_difference",
            passed=True,
            residual=residual,
            tolerance=PHASE_TOLERANCE,
            message="not enforced (entangled_source = false)",
        ))

    w1h, w1v = c.beam1_angular_frequencies()
    wp = c.pump_frequency
    range_residual = max(0.0, -w1h, -w1v, w1h - wp, w1v - wp)
    in_range = 0.0 < w1h < wp and 0.0 < w1v < wp
    checks.append(ConstraintCheck(
        name="frequency_range",
        passed=in_range,
        residual=range_residual,
        tolerance=0.0,
        message="0 < w1H, w1V < w_p",
    ))

    tol = _frequency_tolerance(c)
    if in_range:
        w2h, w2v = derive_beam2_frequencies(c)
        energy = max(abs(w1h + w2v - wp), abs(w1v + w2h - wp))
        beat = abs((w1h - w1v) - (w2h - w2v))
        checks.append(ConstraintCheck("energy_conservation", energy <= tol, energy, tol,
                                      message="w1H + w2V = w1V + w2H = w_p"))
        checks.append(ConstraintCheck("beat_frequency_equality", beat <= tol, beat, tol,
                                      message="w1H - w1V = w2H - w2V"))
    else:
        for name in ("energy_conservation", "beat_frequency_equality"):
            checks.append(ConstraintCheck(name, False, math.inf, tol,
                                          message="skipped: beam-1 frequencies out of range"))

    detuning = c.measured_detuning()
    checks.append(ConstraintCheck(
        name="fractional_detuning",
        passed=detuning <= MAX_FRACTIONAL_DETUNING,
        residual=detuning,
        tolerance=MAX_FRACTIONAL_DETUNING,
        severity="warning",
        message=f"dw/w <= {MAX_FRACTIONAL_DETUNING} (source estimate)",
    ))

    report = ValidationReport(tuple(checks))
    for warning in report.warnings:
        logger.warning(f"Constraint '{warning.name}' above estimate: {warning.residual:.6g} > {warning.tolerance}")
    if not report.passed:
        logger.info(f"Constraint validation failed: {[f.name for f in report.failures]}")
    return report


def derive_beam2_phases(c: SourceConstraints) -> Tuple[float, float]:
    """Beam-2 phases from phase matching: (theta_2H, theta_2V).

    theta_2H = const + delta_2H - theta_1V and theta_2V = const + delta_2V - theta_1H,
    so theta_2H - theta_2V = theta_1H - theta_1V + pi when the waveplate gives pi.

    Raises:
        ConstraintViolationError: If delta_2H - delta_2V != pi with an entangled source
    """
    if c.entangled_source:
        residual = _phase_shift_residual(c)
        if residual > PHASE_TOLERANCE:
            raise ConstraintViolationError(
                f"delta_2h - delta_2v must equal pi (residual {residual:.3g})"
            )
    theta_1h, theta_1v = c.beam1_phases
    theta_2h = c.const_sum + c.delta_2h - theta_1v
    theta_2v = c.const_sum + c.delta_2v - theta_1h
    return theta_2h, theta_2v


def derive_beam2_frequencies(c: SourceConstraints) -> Tuple[float, float]:
    """Beam-2 frequencies from energy conservation: (w2H, w2V) = (w_p - w1V, w_p - w1H).

    Raises:
        ConstraintViolationError: If a beam-1 frequency is outside (0, w_p)
    """
    w1h, w1v = c.beam1_angular_frequencies()
    wp = c.pump_frequency
    for label, w in (("w1H", w1h), ("w1V", w1v)):
        if not 0.0 < w < wp:
            raise ConstraintViolationError(f"{label} = {w} outside (0, w_p = {wp})")
    return wp - w1v, wp - w1h


class Branch(str, Enum):
    """Which polarization pair carries the two photons."""

    PAIR_1H2V = "1H2V"
    PAIR_1V2H = "1V2H"


class BeamIntensities(NamedTuple):
    i1h: float
    i1v: float
    i2h: float
    i2v: float


def intensities_for_branch(branch: Branch) -> BeamIntensities:
    """Component intensities of a branch.

    Args:
        branch: Which polarization pair carries the photons

    Returns:
        (I_1H, I_1V, I_2H, I_2V): 1 on the photon-carrying components, 1/2 on the others
    """
    if branch is Branch.PAIR_1H2V:
        return BeamIntensities(PHOTON_INTENSITY, VACUUM_INTENSITY, VACUUM_INTENSITY, PHOTON_INTENSITY)
    return BeamIntensities(VACUUM_INTENSITY, PHOTON_INTENSITY, PHOTON_INTENSITY, VACUUM_INTENSITY)


@dataclass(frozen=True)
class EmissionEvent:
    """One photon-pair emission. Intensities follow from the branch."""

    branch: Branch
    relative_phase: float
    intensities: BeamIntensities = field(init=False)

    def __post_init__(self) -> None:
        if not math.isfinite(self.relative_phase):
            raise ValueError("relative_phase must be finite")
        object.__setattr__(self, "branch", Branch(self.branch))
        object.__setattr__(self, "relative_phase", normalize_phase(self.relative_phase))
        object.__setattr__(self, "intensities", intensities_for_branch(self.branch))


def sample_emission(rng: np.random.Generator) -> EmissionEvent:
    """Draw one emission: branch Bernoulli(1/2), relative phase uniform on [0, 2pi)."""
    photon_in_1h = rng.random() < 0.5
    phase = rng.random() * TWO_PI
    return EmissionEvent(Branch.PAIR_1H2V if photon_in_1h else Branch.PAIR_1V2H, phase)


@dataclass(frozen=True)
class EmissionBatch:
    """Columnar batch of emissions for vectorized estimators."""

    photon_in_1h: np.ndarray
    relative_phase: np.ndarray

    def __len__(self) -> int:
        return int(self.photon_in_1h.shape[0])

    def event(self, index: int) -> EmissionEvent:
        branch = Branch.PAIR_1H2V if self.photon_in_1h[index] else Branch.PAIR_1V2H
        return EmissionEvent(branch, float(self.relative_phase[index]))

    def intensities(self) -> BeamIntensities:
        """Per-event intensity arrays (I1H, I1V, I2H, I2V)."""
        photon = np.where(self.photon_in_1h, PHOTON_INTENSITY, VACUUM_INTENSITY)
        vacuum = np.where(self.photon_in_1h, VACUUM_INTENSITY, PHOTON_INTENSITY)
        return BeamIntensities(photon, vacuum, vacuum, photon)


def sample_emissions(
    rng: np.random.Generator,
    n: int,
    phase_rng: Optional[np.random.Generator] = None,
) -> EmissionBatch:
    """Draw ``n`` emissions: all branch draws first, then all phases.

    With a separate ``phase_rng`` each quantity has its own stream, so drawing
    in chunks yields the same events as drawing at once.

    Args:
        rng: Generator for the branch draws (and the phases without ``phase_rng``)
        n: Number of events
        phase_rng: Optional generator for the relative phases

    Returns:
        Batch with the photon-in-1H mask and phases in [0, 2pi)

    Raises:
        ValueError: If ``n`` is negative
    """
    photon_in_1h = rng.random(n) < 0.5
    phase = (phase_rng or rng).random(n) * TWO_PI
    phase[phase >= TWO_PI] = 0.0
    return EmissionBatch(photon_in_1h, phase)


class BeamFields(NamedTuple):
    """The four wave components of one emission event."""

    beam1_h: WaveComponent
    beam1_v: WaveComponent
    beam2_h: WaveComponent
    beam2_v: WaveComponent

    def components(self, side: int) -> Tuple[WaveComponent, WaveComponent]:
        if side == 1:
            return self.beam1_h, self.beam1_v
        if side == 2:
            return self.beam2_h, self.beam2_v
        raise ValueError(f"side must be 1 or 2, got {side}")


def event_wave_components(c: SourceConstraints, event: EmissionEvent) -> BeamFields:
    """Build the explicit fields of an event.

    Beam-1 phases are chosen so that the composite angle
    theta_1H - theta_1V + 2 pi x (1/lambda_1H - 1/lambda_1V) equals the event's
    relative phase at t = 0; photon and vacuum waves share it.
    """
    w1h, w1v = c.beam1_angular_frequencies()
    w2h, w2v = derive_beam2_frequencies(c)
    x = c.detector_distance

    theta_1v = c.beam1_phases[1]
    path_term = TWO_PI * x * (1.0 / wavelength_for(w1h) - 1.0 / wavelength_for(w1v))
    theta_1h = theta_1v + event.relative_phase - path_term

    shifted = c.model_copy(update={"beam1_phases": (theta_1h, theta_1v)})
    theta_2h, theta_2v = derive_beam2_phases(shifted)

    i1h, i1v, i2h, i2v = event.intensities
    return BeamFields(
        beam1_h=WaveComponent.from_intensity(i1h, theta_1h, w1h),
        beam1_v=WaveComponent.from_intensity(i1v, theta_1v, w1v),
        beam2_h=WaveComponent.from_intensity(i2h, theta_2h, w2h),
        beam2_v=WaveComponent.from_intensity(i2v, theta_2v, w2v),
    )

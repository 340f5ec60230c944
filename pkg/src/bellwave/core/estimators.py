"""Closed-form expectations of the local wave model.

Every expectation is evaluated from an explicit list of intensity terms.
Products of terms are expanded, the detection rule keeps only terms whose
coefficient carries one photon (unit) intensity per detector, and phase
powers are averaged symbolically: <cos theta> = 0, <cos^2 theta> = 1/2.
"""

import math
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Callable, List, Sequence, Tuple

from .optics import AnalyzerSetting, Port, Side
from .source_model import PHOTON_INTENSITY, Branch, intensities_for_branch
from ..utils.logger import get_logger


logger = get_logger()

TermList = List["IntensityTerm"]


@dataclass(frozen=True)
class IntensityTerm:
    """One additive term of an intensity expression or of a product of them."""

    coefficient: float  # product of intensities, or their square roots for beat terms
    photon_units: int  # unit (photon) intensities inside the coefficient
    phase_power: int  # power of cos(relative phase)
    angle_factor: float  # analyzer trig factor, sign included
    label: str = ""

    def __mul__(self, other: "IntensityTerm") -> "IntensityTerm":
        return IntensityTerm(
            coefficient=self.coefficient * other.coefficient,
            photon_units=self.photon_units + other.photon_units,
            phase_power=self.phase_power + other.phase_power,
            angle_factor=self.angle_factor * other.angle_factor,
            label=f"{self.label}*{other.label}",
        )

    def evaluate(self, cos_phase: float) -> float:
        """Value at a given cos(relative phase), without averaging."""
        return self.coefficient * self.angle_factor * cos_phase**self.phase_power

    def averaged(self) -> float:
        """Value with the cos(relative phase) power replaced by its uniform-phase mean."""
        return self.coefficient * self.angle_factor * phase_average(self.phase_power)


def phase_average(power: int) -> float:
    """Mean of cos^k over a uniform phase: 0 for odd k, C(k, k/2) / 2^k for even k."""
    if power < 0:
        raise ValueError("power must be >= 0")
    if power % 2:
        return 0.0
    return math.comb(power, power // 2) / 2.0**power


def _units(intensity: float) -> int:
    return 1 if intensity == PHOTON_INTENSITY else 0


def _beam_intensities(side: Side, branch: Branch) -> Tuple[float, float]:
    i1h, i1v, i2h, i2v = intensities_for_branch(branch)
    return (i1h, i1v) if side is Side.A else (i2h, i2v)


def intensity_terms(side: Side, port: Port, branch: Branch, theta: float) -> TermList:
    """Terms of one analyzer-output intensity for a given branch.

    Two Malus terms and the beat term; the beat carries sign + on 1n and 2p,
    - on 1p and 2n.
    """
    side, port = Side(side), Port(port)
    i_h, i_v = _beam_intensities(side, branch)
    c2, s2 = math.cos(theta) ** 2, math.sin(theta) ** 2
    sin2 = math.sin(2.0 * theta)
    beat_sign = 1.0 if (side is Side.A) == (port is Port.N) else -1.0
    beam = side.beam
    h_angle, v_angle = (c2, s2) if port is Port.N else (s2, c2)
    return [
        IntensityTerm(i_h, _units(i_h), 0, h_angle, f"I{beam}H"),
        IntensityTerm(i_v, _units(i_v), 0, v_angle, f"I{beam}V"),
        IntensityTerm(
            math.sqrt(i_h * i_v),
            _units(i_h) + _units(i_v),
            1,
            beat_sign * sin2,
            f"beat{beam}{port.value}",
        ),
    ]


def s_function_terms(side: Side, branch: Branch, theta: float) -> TermList:
    """Terms of S = I_n - I_p in collapsed form.

    S1 = (I1H - I1V) cos 2t + 2 sqrt(I1H I1V) cos(phase) sin 2t
    S2 = -(I2V - I2H) cos 2t - 2 sqrt(I2V I2H) cos(phase) sin 2t
    """
    side = Side(side)
    i_h, i_v = _beam_intensities(side, branch)
    cos2, sin2 = math.cos(2.0 * theta), math.sin(2.0 * theta)
    sign = 1.0 if side is Side.A else -1.0
    beam = side.beam
    return [
        IntensityTerm(i_h, _units(i_h), 0, cos2, f"S{beam}H"),
        IntensityTerm(i_v, _units(i_v), 0, -cos2, f"S{beam}V"),
        IntensityTerm(2.0 * math.sqrt(i_h * i_v), _units(i_h) + _units(i_v), 1,
                      sign * sin2, f"S{beam}beat"),
    ]


def expand_product(factors: Sequence[TermList]) -> TermList:
    """Expand a product of sums of terms into a flat list of product terms."""
    expanded = []
    for combo in product(*factors):
        term = combo[0]
        for other in combo[1:]:
            term = term * other
        expanded.append(term)
    return expanded


def apply_coefficient_rule(terms: TermList, n_detectors: int) -> TermList:
    """Keep the terms whose coefficient carries exactly one photon unit per detector.

    Terms with fewer units describe firing of fewer detectors than the
    product asks for (vacuum waves are invisible to detectors) and are dropped.
    """
    kept = [t for t in terms if t.photon_units == n_detectors]
    logger.debug(f"coefficient rule: kept {len(kept)} of {len(terms)} terms")
    return kept


def branch_expectation(factors: Sequence[TermList]) -> float:
    """Phase-averaged expectation of a product for one branch after the detection rule."""
    kept = apply_coefficient_rule(expand_product(factors), len(factors))
    return sum(t.averaged() for t in kept)


def two_branch_average(build: Callable[[Branch], Sequence[TermList]]) -> float:
    """Average over the two equally likely photon-pair branches."""
    return 0.5 * sum(branch_expectation(build(branch)) for branch in Branch)


class CorrelationMethod(str, Enum):
    ANALYTIC = "analytic"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class PortPair:
    """Ports that fire on side A and side B."""

    side_a_port: Port
    side_b_port: Port

    def __post_init__(self) -> None:
        object.__setattr__(self, "side_a_port", Port(self.side_a_port))
        object.__setattr__(self, "side_b_port", Port(self.side_b_port))

    @property
    def outcome_product(self) -> int:
        """Product of the +/-1 outcomes (n -> +1, p -> -1)."""
        return 1 if self.side_a_port is self.side_b_port else -1

    @property
    def key(self) -> str:
        return f"{self.side_a_port.value}{self.side_b_port.value}"


ALL_PORT_PAIRS: Tuple[PortPair, ...] = tuple(
    PortPair(a, b) for a in (Port.N, Port.P) for b in (Port.N, Port.P)
)


@dataclass(frozen=True)
class CorrelationEstimate:
    """A correlation value with its standard error."""

    value: float
    std_error: float
    n_events: int
    method: CorrelationMethod

    def __post_init__(self) -> None:
        if self.std_error < 0 or math.isnan(self.std_error):
            raise ValueError(f"std_error must be >= 0, got {self.std_error}")
        if self.method is CorrelationMethod.ANALYTIC and self.std_error != 0:
            raise ValueError("Analytic estimates carry std_error = 0")
        if self.n_events < 0:
            raise ValueError("n_events must be >= 0")


def _singles(side: Side, port: Port, theta: float) -> float:
    return two_branch_average(lambda b: [intensity_terms(side, port, b, theta)])


def singles_mean(side: Side, port: Port, setting: AnalyzerSetting) -> float:
    """Mean detected intensity at one port; only the local analyzer angle enters."""
    side = Side(side)
    return _singles(side, Port(port), setting.angle(side))


def _same_side(side: Side, theta: float) -> float:
    return two_branch_average(
        lambda b: [intensity_terms(side, Port.N, b, theta), intensity_terms(side, Port.P, b, theta)]
    )


def same_side_correlation(side: Side, setting: AnalyzerSetting) -> float:
    """<I_n I_p> on one side; the kept photon product cancels against the beat term."""
    side = Side(side)
    return _same_side(side, setting.angle(side))


def joint_correlation(pair: PortPair, setting: AnalyzerSetting) -> float:
    """<I_1x I_2y> for the ports in ``pair``."""
    return two_branch_average(
        lambda b: [
            intensity_terms(Side.A, pair.side_a_port, b, setting.theta1),
            intensity_terms(Side.B, pair.side_b_port, b, setting.theta2),
        ]
    )


def bell_correlation(setting: AnalyzerSetting) -> float:
    """Signed sum of the four joint correlations: -<1n2p> - <1p2n> + <1n2n> + <1p2p>."""
    return sum(pair.outcome_product * joint_correlation(pair, setting) for pair in ALL_PORT_PAIRS)


def s_function_moments(side: Side, setting: AnalyzerSetting) -> Tuple[float, float]:
    """(<S>, <S^2>) for one side."""
    side = Side(side)
    theta = setting.angle(side)
    mean = two_branch_average(lambda b: [s_function_terms(side, b, theta)])
    second = two_branch_average(
        lambda b: [s_function_terms(side, b, theta), s_function_terms(side, b, theta)]
    )
    return mean, second


def s_function_correlation(setting: AnalyzerSetting) -> float:
    """<S1 S2>, an independent route to the Bell correlation."""
    return two_branch_average(
        lambda b: [
            s_function_terms(Side.A, b, setting.theta1),
            s_function_terms(Side.B, b, setting.theta2),
        ]
    )


def analytic_estimate(setting: AnalyzerSetting) -> CorrelationEstimate:
    return CorrelationEstimate(
        value=bell_correlation(setting),
        std_error=0.0,
        n_events=0,
        method=CorrelationMethod.ANALYTIC,
    )

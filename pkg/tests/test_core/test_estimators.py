"""Unit tests for the closed-form estimators."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bellwave.core.estimators import (
    ALL_PORT_PAIRS,
    CorrelationEstimate,
    CorrelationMethod,
    IntensityTerm,
    PortPair,
    analytic_estimate,
    apply_coefficient_rule,
    bell_correlation,
    expand_product,
    intensity_terms,
    joint_correlation,
    phase_average,
    s_function_correlation,
    s_function_moments,
    same_side_correlation,
    singles_mean,
)
from bellwave.core.optics import AnalyzerSetting, Port, Side
from bellwave.core.source_model import Branch

angles = st.floats(min_value=-2 * math.pi, max_value=2 * math.pi, allow_nan=False)


class TestTermAlgebra:
    """Test the symbolic term machinery."""

    def test_phase_average(self):
        assert phase_average(0) == 1.0
        assert phase_average(1) == 0.0
        assert phase_average(2) == 0.5
        assert phase_average(3) == 0.0
        assert phase_average(4) == 0.375
        with pytest.raises(ValueError):
            phase_average(-1)

    def test_product_combines_tags(self):
        a = IntensityTerm(1.0, 1, 1, 0.5, "x")
        b = IntensityTerm(0.5, 0, 1, -2.0, "y")
        product = a * b
        assert product.coefficient == 0.5
        assert product.photon_units == 1
        assert product.phase_power == 2
        assert product.angle_factor == -1.0
        assert product.label == "x*y"
        assert product.averaged() == pytest.approx(0.5 * -1.0 * 0.5)

    def test_single_detector_rule_drops_vacuum_malus_term(self):
        """For one detector the vacuum-only Malus term is dropped, photon and beat terms kept."""
        terms = intensity_terms(Side.A, Port.N, Branch.PAIR_1H2V, 0.3)
        kept = apply_coefficient_rule(terms, 1)
        assert [t.label for t in kept] == ["I1H", "beat1n"]

    def test_two_detector_rule_keeps_photon_products(self):
        """Products with fewer than two unit intensities are dropped."""
        factors = [
            intensity_terms(Side.A, Port.N, Branch.PAIR_1H2V, 0.3),
            intensity_terms(Side.B, Port.P, Branch.PAIR_1H2V, 0.9),
        ]
        expanded = expand_product(factors)
        assert len(expanded) == 9
        kept = apply_coefficient_rule(expanded, 2)
        assert sorted(t.label for t in kept) == ["I1H*I2V", "I1H*beat2p", "beat1n*I2V", "beat1n*beat2p"]
        assert all(t.photon_units == 2 for t in kept)
        even = sorted(t.label for t in kept if t.phase_power % 2 == 0)
        assert even == ["I1H*I2V", "beat1n*beat2p"]

    def test_beat_signs(self):
        sin2 = math.sin(0.6)
        for side, port, sign in ((Side.A, Port.N, 1), (Side.A, Port.P, -1),
                                 (Side.B, Port.N, -1), (Side.B, Port.P, 1)):
            beat = intensity_terms(side, port, Branch.PAIR_1V2H, 0.3)[2]
            assert beat.angle_factor == pytest.approx(sign * sin2)
            assert beat.coefficient == pytest.approx(math.sqrt(0.5))


class TestSingles:
    """Test detected singles."""

    @pytest.mark.parametrize("side", [Side.A, Side.B])
    @pytest.mark.parametrize("port", [Port.N, Port.P])
    @pytest.mark.parametrize("theta", [0.0, 0.37, math.pi / 4, 2.0])
    def test_singles_are_half(self, side, port, theta):
        setting = AnalyzerSetting(theta, theta)
        assert singles_mean(side, port, setting) == pytest.approx(0.5, abs=1e-15)

    @given(angles)
    def test_ports_sum_to_one(self, theta):
        setting = AnalyzerSetting(theta, 0.0)
        total = singles_mean(Side.A, Port.N, setting) + singles_mean(Side.A, Port.P, setting)
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_side_a_ignores_theta2(self):
        """Changing the remote angle leaves the side-A singles bit-identical."""
        values = {singles_mean(Side.A, Port.N, AnalyzerSetting(0.37, t2)) for t2 in np.linspace(0, 3, 31)}
        assert len(values) == 1


class TestSameSide:
    """Test same-side correlation."""

    def test_zero_at_pi_over_8(self):
        setting = AnalyzerSetting(math.pi / 8, 0.0)
        assert abs(same_side_correlation(Side.A, setting)) <= 1e-15

    def test_zero_at_zero_angle(self):
        assert same_side_correlation(Side.B, AnalyzerSetting(0.0, 0.0)) == 0.0

    def test_sweep_of_181_angles(self):
        worst = max(
            abs(same_side_correlation(side, AnalyzerSetting(t, t)))
            for t in np.linspace(0.0, math.pi, 181)
            for side in (Side.A, Side.B)
        )
        assert worst <= 1e-15


class TestJointCorrelation:
    """Test joint port-pair correlations."""

    def test_examples(self):
        same = AnalyzerSetting(0.4, 0.4)
        assert joint_correlation(PortPair(Port.N, Port.P), same) == pytest.approx(0.5, abs=1e-15)
        assert joint_correlation(PortPair(Port.N, Port.N), same) == pytest.approx(0.0, abs=1e-15)

    @given(angles, angles)
    def test_closed_forms_and_normalization(self, theta1, theta2):
        setting = AnalyzerSetting(theta1, theta2)
        delta = theta1 - theta2
        values = {pair.key: joint_correlation(pair, setting) for pair in ALL_PORT_PAIRS}
        assert values["np"] == pytest.approx(0.5 * math.cos(delta) ** 2, abs=1e-12)
        assert values["pn"] == pytest.approx(0.5 * math.cos(delta) ** 2, abs=1e-12)
        assert values["nn"] == pytest.approx(0.5 * math.sin(delta) ** 2, abs=1e-12)
        assert values["pp"] == pytest.approx(0.5 * math.sin(delta) ** 2, abs=1e-12)
        assert sum(values.values()) == pytest.approx(1.0, abs=1e-12)

    def test_port_pair_outcome_product(self):
        assert PortPair("n", "n").outcome_product == 1
        assert PortPair(Port.N, Port.P).outcome_product == -1
        assert [p.key for p in ALL_PORT_PAIRS] == ["nn", "np", "pn", "pp"]


class TestBellCorrelation:
    """Test the Bell correlation and the S-function path."""

    def test_extremes(self):
        assert bell_correlation(AnalyzerSetting(0.3, 0.3)) == pytest.approx(-1.0, abs=1e-15)
        assert bell_correlation(AnalyzerSetting(math.pi / 4, 0.0)) == pytest.approx(0.0, abs=1e-15)
        assert bell_correlation(AnalyzerSetting(math.pi / 2, 0.0)) == pytest.approx(1.0, abs=1e-15)

    def test_grid_matches_minus_cos_two_delta(self):
        worst = 0.0
        for delta in np.linspace(0.0, 2 * math.pi, 361):
            value = bell_correlation(AnalyzerSetting.from_delta(float(delta)))
            worst = max(worst, abs(value + math.cos(2 * delta)))
        assert worst <= 1e-12

    @given(angles, angles, angles)
    def test_shift_invariance(self, theta1, theta2, shift):
        base = bell_correlation(AnalyzerSetting(theta1, theta2))
        shifted = bell_correlation(AnalyzerSetting(theta1 + shift, theta2 + shift))
        assert shifted == pytest.approx(base, abs=1e-12)
        assert -1.0 - 1e-12 <= base <= 1.0 + 1e-12

    def test_paths_agree_on_361_settings(self):
        worst = 0.0
        for delta in np.linspace(0.0, 2 * math.pi, 361):
            setting = AnalyzerSetting.from_delta(float(delta), theta1=0.1)
            worst = max(worst, abs(s_function_correlation(setting) - bell_correlation(setting)))
        assert worst <= 1e-12

    @pytest.mark.parametrize("side", [Side.A, Side.B])
    @pytest.mark.parametrize("theta", [0.0, 0.3, math.pi / 8, 1.4])
    def test_s_function_moments(self, side, theta):
        mean, second = s_function_moments(side, AnalyzerSetting(theta, theta))
        assert mean == pytest.approx(0.0, abs=1e-15)
        assert second == pytest.approx(1.0, abs=1e-12)


class TestCorrelationEstimate:
    """Test estimate invariants."""

    def test_analytic_estimate(self):
        estimate = analytic_estimate(AnalyzerSetting(0.0, 0.0))
        assert estimate.method is CorrelationMethod.ANALYTIC
        assert estimate.std_error == 0.0
        assert estimate.value == pytest.approx(-1.0)

    def test_rejects_negative_std_error(self):
        with pytest.raises(ValueError):
            CorrelationEstimate(0.1, -0.01, 10, CorrelationMethod.MONTE_CARLO)

    def test_analytic_must_have_zero_error(self):
        with pytest.raises(ValueError):
            CorrelationEstimate(0.1, 0.01, 0, CorrelationMethod.ANALYTIC)

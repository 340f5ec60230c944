"""Unit tests for the source model."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from pydantic import ValidationError as PydanticValidationError

from bellwave.core.source_model import (
    PHOTON_INTENSITY,
    TWO_PI,
    VACUUM_INTENSITY,
    Branch,
    ConstraintViolationError,
    EmissionEvent,
    SourceConstraints,
    WaveComponent,
    derive_beam2_frequencies,
    derive_beam2_phases,
    event_wave_components,
    intensities_for_branch,
    normalize_phase,
    sample_emission,
    sample_emissions,
    validate_constraints,
    wrap_to_pi,
)

finite_floats = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


class TestPhaseHelpers:
    """Test phase normalization."""

    @given(finite_floats)
    def test_normalize_phase_range_and_idempotence(self, phase):
        """Normalized phases lie in [0, 2pi) and normalizing twice changes nothing."""
        once = normalize_phase(phase)
        assert 0.0 <= once < TWO_PI
        assert normalize_phase(once) == once

    def test_normalize_phase_examples(self):
        assert normalize_phase(TWO_PI) == 0.0
        assert normalize_phase(-0.1) == pytest.approx(TWO_PI - 0.1)
        assert normalize_phase(3 * math.pi) == pytest.approx(math.pi)

    def test_wrap_to_pi(self):
        assert wrap_to_pi(math.pi) == pytest.approx(math.pi)
        assert wrap_to_pi(-math.pi) == pytest.approx(math.pi)
        assert wrap_to_pi(1.5 * math.pi) == pytest.approx(-0.5 * math.pi)
        assert wrap_to_pi(0.0) == 0.0


class TestConstraints:
    """Test constraint validation."""

    def test_defaults_pass(self, default_constraints):
        """The default source satisfies every constraint exactly."""
        report = validate_constraints(default_constraints)
        assert report.passed
        assert report.warnings == []
        assert report.get("phase_shift_difference").residual == 0.0
        assert report.get("energy_conservation").residual == 0.0
        assert report.get("beat_frequency_equality").residual == 0.0

    def test_missing_waveplate_fails_with_residual_pi(self):
        """delta_2h - delta_2v = 0 fails with residual pi."""
        report = validate_constraints(SourceConstraints(delta_2h=0.0))
        assert not report.passed
        check = report.get("phase_shift_difference")
        assert not check.passed
        assert check.residual == pytest.approx(math.pi)

    def test_unentangled_source_skips_phase_check(self):
        report = validate_constraints(SourceConstraints(delta_2h=0.0, entangled_source=False))
        assert report.passed

    def test_large_detuning_warns(self):
        """Detuning above 0.007 is a warning, not a failure."""
        report = validate_constraints(SourceConstraints(fractional_detuning=0.01))
        assert report.passed
        assert [w.name for w in report.warnings] == ["fractional_detuning"]
        assert report.get("fractional_detuning").residual == pytest.approx(0.01)

    def test_frequency_out_of_range(self):
        wp = SourceConstraints().pump_frequency
        c = SourceConstraints(beam1_frequencies=(1.5 * wp, 0.5 * wp))
        report = validate_constraints(c)
        assert not report.passed
        assert not report.get("frequency_range").passed
        with pytest.raises(ConstraintViolationError):
            derive_beam2_frequencies(c)

    def test_nan_field_rejected(self):
        with pytest.raises(PydanticValidationError):
            SourceConstraints(const_sum=float("nan"))

    def test_pump_must_be_positive(self):
        with pytest.raises(PydanticValidationError):
            SourceConstraints(pump_frequency=-1.0)


class TestBeamTwoDerivation:
    """Test phase matching and energy conservation."""

    def test_phases_carry_pi_shift(self):
        """theta_2H - theta_2V = theta_1H - theta_1V + pi."""
        c = SourceConstraints(const_sum=0.3, beam1_phases=(0.2, 0.5))
        theta_2h, theta_2v = derive_beam2_phases(c)
        assert theta_2h == pytest.approx(0.3 + math.pi - 0.5)
        assert theta_2v == pytest.approx(0.3 - 0.2)
        assert theta_2h - theta_2v == pytest.approx((0.2 - 0.5) + math.pi)

    def test_phase_violation_raises(self):
        with pytest.raises(ConstraintViolationError):
            derive_beam2_phases(SourceConstraints(delta_2h=1.0))

    def test_frequencies_conserve_energy(self):
        c = SourceConstraints(fractional_detuning=0.003)
        w1h, w1v = c.beam1_angular_frequencies()
        w2h, w2v = derive_beam2_frequencies(c)
        assert w1h + w2v == pytest.approx(c.pump_frequency, rel=1e-15)
        assert w1v + w2h == pytest.approx(c.pump_frequency, rel=1e-15)
        assert c.measured_detuning() == pytest.approx(0.003)


class TestEmissions:
    """Test event sampling."""

    def test_branch_intensities(self):
        assert intensities_for_branch(Branch.PAIR_1H2V) == (
            PHOTON_INTENSITY, VACUUM_INTENSITY, VACUUM_INTENSITY, PHOTON_INTENSITY
        )
        assert intensities_for_branch(Branch.PAIR_1V2H) == (
            VACUUM_INTENSITY, PHOTON_INTENSITY, PHOTON_INTENSITY, VACUUM_INTENSITY
        )

    def test_event_normalizes_phase(self):
        event = EmissionEvent("1H2V", -math.pi / 2)
        assert event.branch is Branch.PAIR_1H2V
        assert event.relative_phase == pytest.approx(1.5 * math.pi)
        assert event.intensities.i1h == PHOTON_INTENSITY

    def test_event_rejects_nan_phase(self):
        with pytest.raises(ValueError):
            EmissionEvent(Branch.PAIR_1V2H, float("nan"))

    def test_sample_emission(self, rng):
        events = [sample_emission(rng) for _ in range(2000)]
        share = sum(e.branch is Branch.PAIR_1H2V for e in events) / len(events)
        assert 0.45 < share < 0.55
        assert all(0.0 <= e.relative_phase < TWO_PI for e in events)

    def test_phase_moments(self, rng):
        """Uniform phases: mean cos -> 0, mean cos^2 -> 1/2."""
        batch = sample_emissions(rng, 100_000)
        cos = np.cos(batch.relative_phase)
        assert abs(np.mean(cos)) < 0.01
        assert np.mean(cos**2) == pytest.approx(0.5, abs=0.01)

    def test_chunked_draws_match_single_draw(self):
        """With separate streams, chunked sampling reproduces one large draw."""

        def streams():
            return (np.random.Generator(np.random.Philox(1)), np.random.Generator(np.random.Philox(2)))

        branch, phase = streams()
        whole = sample_emissions(branch, 1000, phase_rng=phase)
        branch, phase = streams()
        parts = [sample_emissions(branch, n, phase_rng=phase) for n in (300, 700)]
        np.testing.assert_array_equal(
            whole.photon_in_1h, np.concatenate([p.photon_in_1h for p in parts])
        )
        np.testing.assert_array_equal(
            whole.relative_phase, np.concatenate([p.relative_phase for p in parts])
        )

    def test_batch_event_view(self, rng):
        batch = sample_emissions(rng, 10)
        event = batch.event(3)
        assert event.relative_phase == pytest.approx(batch.relative_phase[3])
        i1h, i1v, i2h, i2v = batch.intensities()
        np.testing.assert_array_equal(i1h, i2v)
        np.testing.assert_array_equal(i1v, i2h)


class TestWaveComponents:
    """Test explicit field construction."""

    def test_from_intensity(self):
        wave = WaveComponent.from_intensity(VACUUM_INTENSITY, 0.1, 1e15)
        assert wave.magnitude == pytest.approx(1.0)
        assert wave.intensity == pytest.approx(VACUUM_INTENSITY)
        assert wave.wavelength == pytest.approx(TWO_PI * 299_792_458.0 / 1e15)

    def test_rejects_negative_magnitude(self):
        with pytest.raises(ValueError):
            WaveComponent(-1.0, 0.0, 1e15, 1e-6)

    def test_event_fields(self, default_constraints):
        """The composite angle at the detector equals the event's relative phase."""
        event = EmissionEvent(Branch.PAIR_1V2H, 2.0)
        fields = event_wave_components(default_constraints, event)
        x = default_constraints.detector_distance
        composite = fields.beam1_h.phase_offset(x) - fields.beam1_v.phase_offset(x)
        assert wrap_to_pi(composite - 2.0) == pytest.approx(0.0, abs=1e-7)
        assert fields.beam1_v.intensity == pytest.approx(PHOTON_INTENSITY)
        assert fields.beam2_v.intensity == pytest.approx(VACUUM_INTENSITY)
        w2h, w2v = derive_beam2_frequencies(default_constraints)
        assert fields.beam2_h.angular_frequency == w2h
        assert fields.beam2_v.angular_frequency == w2v

    def test_components_lookup(self, default_constraints):
        fields = event_wave_components(default_constraints, EmissionEvent(Branch.PAIR_1H2V, 0.0))
        assert fields.components(2) == (fields.beam2_h, fields.beam2_v)
        with pytest.raises(ValueError):
            fields.components(3)

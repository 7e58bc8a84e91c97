import math

import numpy as np
import pytest

from src.errors import NegativeWind, OutOfRange, RateTooLow, TooShort, UnitMismatch
from src.model.trace import SampledTrace, Unit
from src.noise.channel import transmission, transmit_photons
from src.noise.params import (PhaseNoiseParams, PhaseStabilizerParams, PolarizationDriftParams,
                              RandomSeed, ThermalDelayParams)
from src.noise.phase import integrate_phase, simulate_frequency_pair, stabilize_phase
from src.noise.polarization import (RoundTripMode, free_drift_budget, simulate_polarization_walk,
                                    simulate_round_trip_polarization)
from src.noise.thermal import differential_thermal_tau0, simulate_thermal_delay, thermal_coefficient

SPAN_M = 42_500.0


def _angles(stokes: SampledTrace) -> np.ndarray:
    p = stokes.values
    return np.arccos(np.clip(np.sum(p[1:] * p[:-1], axis=1), -1.0, 1.0))


# ── seeds ─────────────────────────────────────────────────────────────────────


def test_named_streams_are_independent_and_reproducible():
    seed = RandomSeed(seed=7)
    a1 = seed.child("phase").generator().standard_normal(4)
    a2 = seed.child("phase").generator().standard_normal(4)
    b = seed.child("polarization").generator().standard_normal(4)
    assert np.array_equal(a1, a2)
    assert not np.array_equal(a1, b)


# ── phase ─────────────────────────────────────────────────────────────────────


def test_frequency_pair_variance_and_covariance():
    params = PhaseNoiseParams()
    f_a, f_b = simulate_frequency_pair(params, SPAN_M, duration=20.0, seed=3)
    assert len(f_a) == len(f_b) == 1_000_000
    assert np.var(f_a.values) == pytest.approx(params.variance(SPAN_M), rel=0.01)
    assert np.var(f_b.values) == pytest.approx(params.variance(SPAN_M), rel=0.01)
    assert np.cov(f_a.values, f_b.values)[0, 1] == pytest.approx(params.covariance(SPAN_M), rel=0.02)


def test_frequency_variance_scales_with_rate():
    params = PhaseNoiseParams()
    f_a, _ = simulate_frequency_pair(params, SPAN_M, duration=5.0, dt=1.0 / 100e3, seed=4)
    assert np.var(f_a.values) == pytest.approx(2.0 * params.variance(SPAN_M), rel=0.02)
    block_means = f_a.values.reshape(-1, 2).mean(axis=1)
    assert np.var(block_means) == pytest.approx(params.variance(SPAN_M), rel=0.02)


def test_uncorrelated_spans():
    params = PhaseNoiseParams(covariance_fraction=0.0)
    f_a, f_b = simulate_frequency_pair(params, SPAN_M, duration=5.0, seed=5)
    assert abs(np.corrcoef(f_a.values, f_b.values)[0, 1]) < 0.01


def test_frequency_pair_is_deterministic():
    first = simulate_frequency_pair(PhaseNoiseParams(), SPAN_M, duration=0.1, seed=9)
    second = simulate_frequency_pair(PhaseNoiseParams(), SPAN_M, duration=0.1, seed=9)
    assert np.array_equal(first[0].values, second[0].values)
    assert np.array_equal(first[1].values, second[1].values)


def test_duration_shorter_than_a_sample():
    with pytest.raises(TooShort):
        simulate_frequency_pair(PhaseNoiseParams(), SPAN_M, duration=1e-6)


def test_integrate_phase_is_a_running_sum():
    freq = SampledTrace(dt=0.5, values=[1.0, -2.0, 0.5], unit=Unit.HERTZ)
    phase = integrate_phase(freq)
    assert phase.unit == Unit.RADIANS
    assert np.allclose(phase.values, 2 * np.pi * 0.5 * np.array([0.0, 1.0, -1.0, -0.5]))


def test_integrate_phase_needs_frequency():
    with pytest.raises(UnitMismatch):
        integrate_phase(SampledTrace(dt=1.0, values=[0.0], unit=Unit.RADIANS))


def test_stabilizer_needs_a_fast_trace():
    phase = SampledTrace(dt=1.0 / 50e3, values=np.zeros(10), unit=Unit.RADIANS)
    with pytest.raises(RateTooLow):
        stabilize_phase(phase, PhaseStabilizerParams())


@pytest.fixture(scope="module")
def fast_phase():
    f_a, _ = simulate_frequency_pair(PhaseNoiseParams(), SPAN_M, duration=0.05, dt=1.0 / 2e6, seed=9)
    return integrate_phase(f_a)


def test_wider_loops_leave_less_residual(fast_phase):
    bandwidths = [1e3, 10e3, 100e3, 300e3, 650e3, 1e6]
    rms = [
        np.sqrt(np.mean(stabilize_phase(fast_phase, PhaseStabilizerParams(bandwidth_3db=b)).values ** 2))
        for b in bandwidths
    ]
    assert all(wide < narrow for narrow, wide in zip(rms, rms[1:]))
    assert rms[-1] < np.sqrt(np.mean(fast_phase.values**2))


def test_stabilizer_removes_a_constant_offset():
    phase = SampledTrace(dt=1e-7, values=np.full(500, 1.0), unit=Unit.RADIANS)
    residual = stabilize_phase(phase, PhaseStabilizerParams())
    assert residual.values[0] == pytest.approx(1.0)
    assert abs(residual.values[-1]) < 1e-6


# ── polarization ──────────────────────────────────────────────────────────────


def test_walk_stays_on_the_sphere(constant_wind):
    walk = simulate_polarization_walk(PolarizationDriftParams(), constant_wind(15.0, 601), dt=1.0, seed=1)
    assert walk.unit == Unit.STOKES
    assert len(walk) == 601
    assert np.allclose(np.linalg.norm(walk.values, axis=1), 1.0)
    assert np.allclose(walk.values[0], [1.0, 0.0, 0.0])


def test_still_air_does_not_drift(constant_wind):
    walk = simulate_polarization_walk(PolarizationDriftParams(), constant_wind(0.0, 50), dt=1.0)
    assert np.allclose(walk.values, walk.values[0])


def test_mean_step_follows_the_wind_law(constant_wind):
    params = PolarizationDriftParams()
    walk = simulate_polarization_walk(params, constant_wind(10.0, 20_001), dt=1.0, seed=2)
    expected = 1.74e-3 * 10.0**1.74
    assert np.mean(_angles(walk)) == pytest.approx(expected, rel=0.02)


def test_free_drift_budget_matches_the_walk_spread(constant_wind):
    params = PolarizationDriftParams()
    walk = simulate_polarization_walk(params, constant_wind(5.0, 40_001), dt=1.0, seed=3)
    chunks = walk.values[::50]
    angles = np.arccos(np.clip(np.sum(chunks[1:] * chunks[:-1], axis=1), -1.0, 1.0))
    rms = np.sqrt(np.mean(angles**2))
    assert free_drift_budget(params, 5.0, rms) == pytest.approx(50.0, rel=0.15)


def test_free_drift_budget_shrinks_with_wind():
    params = PolarizationDriftParams()
    tolerance = math.radians(20.0)
    assert free_drift_budget(params, 0.0, tolerance) == math.inf
    assert free_drift_budget(params, 5.0, tolerance) > 60.0
    assert free_drift_budget(params, 15.0, tolerance) < 5.0


def test_negative_wind_is_rejected(constant_wind):
    with pytest.raises(NegativeWind):
        simulate_polarization_walk(PolarizationDriftParams(), constant_wind(-1.0, 10), dt=1.0)


def test_walk_longer_than_the_wind_record(constant_wind):
    with pytest.raises(OutOfRange):
        simulate_polarization_walk(PolarizationDriftParams(), constant_wind(5.0, 10), dt=1.0, duration=60.0)


def test_start_must_be_fully_polarized(constant_wind):
    with pytest.raises(ValueError):
        simulate_polarization_walk(PolarizationDriftParams(), constant_wind(5.0, 10), dt=1.0, p0=(1.0, 1.0, 0.0))


def test_composed_round_trip(constant_wind):
    one_way = PolarizationDriftParams.one_way()
    wind = constant_wind(10.0, 301)
    composed = simulate_round_trip_polarization(
        one_way, one_way, PolarizationDriftParams.round_trip(), wind, dt=1.0, seed=4, mode=RoundTripMode.COMPOSED
    )
    direct = simulate_round_trip_polarization(
        one_way, one_way, PolarizationDriftParams.round_trip(), wind, dt=1.0, seed=4
    )
    assert len(composed) == len(direct) == 301
    assert np.allclose(np.linalg.norm(composed.values, axis=1), 1.0)
    assert np.allclose(composed.values[0], [1.0, 0.0, 0.0])
    assert not np.allclose(composed.values, direct.values)


def test_still_return_fiber_leaves_the_outbound_drift(constant_wind):
    params = PolarizationDriftParams.one_way()
    still = PolarizationDriftParams(kappa=0.0)
    returned = simulate_round_trip_polarization(
        params, still, params, constant_wind(10.0, 401), dt=1.0, seed=8, mode=RoundTripMode.COMPOSED
    )
    assert np.mean(_angles(returned)) == pytest.approx(1.74e-3 * 10.0**1.74, rel=0.2)


# ── thermal ───────────────────────────────────────────────────────────────────


def test_thermal_delay_follows_temperature():
    params = ThermalDelayParams()
    temperature = SampledTrace(dt=60.0, values=np.linspace(10.0, 20.0, 11), unit=Unit.CELSIUS)
    delay = simulate_thermal_delay(params, temperature, tau0=425.45e-6)
    assert delay.unit == Unit.SECONDS
    assert delay.values[0] == 0.0
    slope = np.polyfit(temperature.values, delay.values, 1)[0]
    assert slope == pytest.approx(3.616e-9, rel=1e-3)
    assert thermal_coefficient(params, 425.45e-6) == pytest.approx(slope)


def test_thermal_delay_against_fixed_reference():
    temperature = SampledTrace(dt=1.0, values=[25.0], unit=Unit.CELSIUS)
    delay = simulate_thermal_delay(ThermalDelayParams(), temperature, tau0=1e-3, reference_temperature=20.0)
    assert delay.values[0] == pytest.approx(5.0 * 8.5e-6 * 1e-3)


def test_differential_thermal_tau0():
    assert differential_thermal_tau0(415.045e-6, -0.01) == pytest.approx(4.15045e-6)
    with pytest.raises(ValueError):
        differential_thermal_tau0(0.0, 0.01)


# ── channel ───────────────────────────────────────────────────────────────────


def test_transmission_of_three_db():
    assert transmission(0.0) == 1.0
    assert transmission(10.0 * math.log10(2.0)) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        transmission(-1.0)


def test_photon_counts_are_poisson():
    counts = transmit_photons(2.0, 3.0103, 200_000, seed=6)
    assert counts.mean() == pytest.approx(1.0, rel=0.01)
    assert counts.var() == pytest.approx(1.0, rel=0.02)
    assert np.array_equal(counts, transmit_photons(2.0, 3.0103, 200_000, seed=6))

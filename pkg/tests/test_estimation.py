import math
import warnings

import numpy as np
import pytest

from src.errors import (DegenerateInput, InvalidRate, MisalignedTraces, OutOfRange, RangeEmpty,
                        RateTooHigh, TooShort)
from src.estimation.fits import (adjusted_r_squared, fit_gaussian_variance, fit_linear, fit_power_law,
                                 histogram)
from src.estimation.phase import (differentiate_phase, downsample, span_noise_from_traces,
                                  span_variance_covariance)
from src.estimation.polarization import polarization_drift_rate, rolling_mean, stokes_component
from src.estimation.resample import resample_linear
from src.estimation.spectral import psd_slope, spectrogram, welch_psd
from src.model.trace import SampledTrace, Unit
from src.noise.params import PhaseNoiseParams, PhaseStabilizerParams, RandomSeed
from src.noise.phase import integrate_phase, simulate_frequency_pair, stabilize_phase

SPAN_M = 42_500.0


def _rng(key: str) -> np.random.Generator:
    return RandomSeed(seed=12).child(key).generator()


# ── variance algebra ──────────────────────────────────────────────────────────


def test_span_algebra_exact():
    variance, covariance = span_variance_covariance(1720.0, 21200.0)
    assert variance == pytest.approx((21200.0 + 1720.0) / 4, rel=1e-9)
    assert covariance == pytest.approx((21200.0 - 1720.0) / 4, rel=1e-9)


def test_span_algebra_matches_quoted_figures():
    variance, covariance = span_variance_covariance(1720.0, 21200.0)
    assert variance == pytest.approx(5740.0, rel=0.0025)
    assert covariance == pytest.approx(4880.0, rel=0.0025)


def test_equal_sum_and_difference_means_independent_spans():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert span_variance_covariance(4.0, 4.0) == (2.0, 0.0)


def test_span_algebra_inverts_the_generative_map():
    variance, covariance = 5000.0, 1234.5
    assert span_variance_covariance(2 * variance - 2 * covariance, 2 * variance + 2 * covariance) == pytest.approx(
        (variance, covariance)
    )


def test_negative_variance_is_rejected():
    with pytest.raises(ValueError):
        span_variance_covariance(-1.0, 2.0)


def test_pipeline_recovers_span_noise():
    params = PhaseNoiseParams()
    f_a, f_b = simulate_frequency_pair(params, SPAN_M, duration=20.0, seed=31)
    estimate = span_noise_from_traces(f_a, f_b)
    assert estimate.variance == pytest.approx(params.variance(SPAN_M), rel=0.02)
    assert estimate.covariance == pytest.approx(params.covariance(SPAN_M), rel=0.02)
    assert estimate.correlation == pytest.approx(params.covariance_fraction, rel=0.02)
    names = [r["record"] for r in estimate.to_records()]
    assert names == ["phase.V_D", "phase.V_R", "phase.span"]


# ── phase/frequency conversion ────────────────────────────────────────────────


def test_constant_frequency_winds_one_cycle():
    freq = SampledTrace(dt=20e-6, values=np.full(50, 1000.0), unit=Unit.HERTZ)
    assert integrate_phase(freq).values[-1] == pytest.approx(2 * math.pi)


def test_differentiate_undoes_integrate():
    x = _rng("roundtrip").normal(0.0, math.sqrt(21200.0), 10_000)
    freq = SampledTrace(dt=20e-6, values=x, unit=Unit.HERTZ)
    back = differentiate_phase(integrate_phase(freq))
    assert np.allclose(back.values, x, rtol=1e-9, atol=1e-9 * np.abs(x).max())


def test_differentiate_needs_two_samples():
    with pytest.raises(TooShort):
        differentiate_phase(SampledTrace(dt=1.0, values=[0.0], unit=Unit.RADIANS))


def test_stabilized_phase_residual_is_small():
    f_a, _ = simulate_frequency_pair(PhaseNoiseParams(), SPAN_M, duration=0.05, dt=1.0 / 2e6, seed=2)
    residual = stabilize_phase(integrate_phase(f_a), PhaseStabilizerParams())
    assert np.sqrt(np.mean(residual.values**2)) <= 0.1


# ── downsampling ──────────────────────────────────────────────────────────────


def test_downsample_takes_block_means():
    trace = SampledTrace(dt=0.25, values=np.arange(10.0), unit=Unit.HERTZ)
    down = downsample(trace, 2.0)
    assert down.dt == 0.5
    assert np.allclose(down.values, [0.5, 2.5, 4.5, 6.5, 8.5])


def test_downsample_to_the_same_rate_is_identity():
    trace = SampledTrace(dt=0.5, values=[1.0, 2.0], unit=Unit.HERTZ)
    assert downsample(trace, 2.0) is trace


def test_downsample_refuses_to_upsample():
    with pytest.raises(RateTooHigh):
        downsample(SampledTrace(dt=1.0, values=[1.0, 2.0], unit=Unit.HERTZ), 2.0)


def test_downsample_needs_an_integer_factor():
    with pytest.raises(InvalidRate):
        downsample(SampledTrace(dt=1.0 / 100e3, values=np.zeros(100), unit=Unit.HERTZ), 30e3)


def test_downsample_needs_one_full_block():
    with pytest.raises(TooShort):
        downsample(SampledTrace(dt=0.1, values=[1.0, 2.0], unit=Unit.HERTZ), 1.0)


def test_downsampled_stokes_stays_on_the_sphere():
    values = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    down = downsample(SampledTrace(dt=1.0, values=values, unit=Unit.STOKES), 0.5)
    assert np.allclose(down.values, [[math.sqrt(0.5), math.sqrt(0.5), 0.0]])


# ── fits ──────────────────────────────────────────────────────────────────────


def test_gaussian_fit_of_differential_noise():
    samples = _rng("gaussian").normal(0.0, math.sqrt(1720.0), 100_000)
    fit = fit_gaussian_variance(samples)
    assert abs(fit.variance - 1720.0) < 3 * fit.variance_std_error
    assert abs(fit.skewness) < 0.05
    assert abs(fit.excess_kurtosis) < 0.1


def test_gaussian_fit_needs_two_samples():
    with pytest.raises(TooShort):
        fit_gaussian_variance([1.0])


def test_histogram_is_normalized():
    samples = _rng("histogram").normal(0.0, 1.0, 50_000)
    frame = histogram(samples, bins=51)
    assert list(frame.columns) == ["center", "density", "gaussian"]
    width = frame["center"].iloc[1] - frame["center"].iloc[0]
    assert frame["density"].sum() * width == pytest.approx(1.0)


def test_power_law_is_exact_on_clean_data():
    x = np.array([0.0, 2.0, 5.0, 10.0, 20.0])
    y = 1.74e-3 * np.power(x, 1.74)
    fit = fit_power_law(y, x)
    assert fit.kappa == pytest.approx(1.74e-3, rel=1e-9)
    assert fit.n_exponent == pytest.approx(1.74, rel=1e-9)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.n_points == 4
    assert fit.n_excluded == 1


def test_power_law_needs_positive_points():
    with pytest.raises(DegenerateInput):
        fit_power_law([1.0, 0.0, -1.0], [1.0, 2.0, 3.0])


def test_linear_fit_recovers_slope():
    temperature = np.linspace(-5.0, 25.0, 31)
    delay = 3.616e-9 * temperature + 1e-9
    fit = fit_linear(delay, temperature)
    assert fit.slope == pytest.approx(3.616e-9, rel=1e-9)
    assert fit.intercept == pytest.approx(1e-9, rel=1e-6)
    assert fit.adj_r_squared == pytest.approx(1.0)


def test_linear_fit_needs_distinct_regressors():
    with pytest.raises(DegenerateInput):
        fit_linear([1.0, 2.0, 3.0], [4.0, 4.0, 4.0])


def test_fit_rejects_misaligned_traces():
    y = SampledTrace(dt=1.0, values=[1.0, 2.0, 3.0], unit=Unit.SECONDS)
    x = SampledTrace(t0=0.5, dt=1.0, values=[1.0, 2.0, 3.0], unit=Unit.CELSIUS)
    with pytest.raises(MisalignedTraces):
        fit_linear(y, x)


def test_adjusted_r_squared():
    assert adjusted_r_squared(0.9, 11) == pytest.approx(1.0 - 0.1 * 10 / 9)
    assert adjusted_r_squared(0.5, 2) == 0.5


def test_fit_renders_a_record():
    record = fit_linear([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]).to_record("delay.round_trip")
    assert record["record"] == "delay.round_trip"
    assert record["kind"] == "LinearFit"
    assert record["slope"] == pytest.approx(1.0)


# ── spectra ───────────────────────────────────────────────────────────────────


def test_brownian_phase_falls_twenty_db_per_decade():
    f_a, _ = simulate_frequency_pair(PhaseNoiseParams(), SPAN_M, duration=20.0, seed=41)
    spec = welch_psd(integrate_phase(f_a), segment_length=65536)
    assert spec.unit == Unit.RADIANS
    assert psd_slope(spec, 10.0, 1000.0) == pytest.approx(-20.0, abs=2.0)


def test_white_noise_power_matches_variance():
    trace = SampledTrace(dt=1e-3, values=_rng("white").normal(0.0, 2.0, 200_000), unit=Unit.HERTZ)
    spec = welch_psd(trace, segment_length=1024)
    assert spec.overlap == 512
    assert np.all(np.diff(spec.frequencies) > 0)
    assert spec.total_power() == pytest.approx(4.0, rel=0.05)
    assert abs(psd_slope(spec, 10.0, 400.0)) < 1.0


def test_psd_band_must_be_non_empty():
    trace = SampledTrace(dt=1e-3, values=np.zeros(4096), unit=Unit.HERTZ)
    spec = welch_psd(trace, segment_length=1024)
    with pytest.raises(RangeEmpty):
        psd_slope(spec, 100.0, 10.0)
    with pytest.raises(RangeEmpty):
        psd_slope(spec, 10.0, 400.0)


def test_psd_segment_longer_than_trace():
    with pytest.raises(TooShort):
        welch_psd(SampledTrace(dt=1.0, values=np.zeros(10), unit=Unit.HERTZ), segment_length=64)


def test_spectrogram_windows():
    trace = SampledTrace(dt=1.0, values=_rng("spectrogram").normal(size=105), unit=Unit.DIMENSIONLESS)
    spectra = spectrogram(trace, window=20.0)
    assert len(spectra) == 5
    assert [s.t_start for s in spectra] == [0.0, 20.0, 40.0, 60.0, 80.0]
    assert spectra[0].resolution == pytest.approx(1.0 / 20.0)


def test_spectrogram_longer_than_trace():
    with pytest.raises(TooShort):
        spectrogram(SampledTrace(dt=1.0, values=np.zeros(10), unit=Unit.HERTZ), window=20.0)


# ── polarization ──────────────────────────────────────────────────────────────


def test_quarter_turn_drift_rate():
    stokes = SampledTrace(dt=2.0, values=[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], unit=Unit.STOKES)
    rate = polarization_drift_rate(stokes)
    assert rate.unit == Unit.RAD_PER_S
    assert rate.values[0] == pytest.approx(math.pi / 4)


def test_stokes_component():
    stokes = SampledTrace(dt=1.0, values=[[0.6, 0.8, 0.0], [0.0, 0.0, 1.0]], unit=Unit.STOKES)
    assert np.allclose(stokes_component(stokes, 1).values, [0.8, 0.0])


def test_rolling_mean_is_centered():
    trace = SampledTrace(dt=1.0, values=np.arange(5.0), unit=Unit.RAD_PER_S)
    assert np.allclose(rolling_mean(trace, 3.0).values, [0.5, 1.0, 2.0, 3.0, 3.5])
    assert np.allclose(rolling_mean(trace, 2.0).values, [0.0, 0.5, 1.5, 2.5, 3.5])
    assert rolling_mean(trace, 1.0) is trace


@pytest.mark.parametrize("window", [2.0, 3.0, 4.0, 5.0])
def test_step_becomes_a_ramp_one_window_wide(window):
    step = SampledTrace(dt=1.0, values=np.repeat([0.0, 1.0], 10), unit=Unit.RAD_PER_S)
    smoothed = rolling_mean(step, window).values
    last_zero = np.flatnonzero(smoothed == 0.0)[-1]
    first_one = np.flatnonzero(smoothed == 1.0)[0]
    assert first_one - last_zero == window
    assert np.all(np.diff(smoothed) >= 0)


def test_rolling_mean_rejects_stokes():
    stokes = SampledTrace(dt=1.0, values=[[1.0, 0.0, 0.0]], unit=Unit.STOKES)
    with pytest.raises(ValueError):
        rolling_mean(stokes, 3.0)


# ── resampling ────────────────────────────────────────────────────────────────


def test_resample_interpolates_linearly():
    trace = SampledTrace(dt=10.0, values=[0.0, 10.0, 30.0], unit=Unit.CELSIUS)
    resampled = resample_linear(trace, [0.0, 5.0, 10.0, 15.0, 20.0])
    assert resampled.dt == 5.0
    assert resampled.unit == Unit.CELSIUS
    assert np.allclose(resampled.values, [0.0, 5.0, 10.0, 20.0, 30.0])


def test_resample_outside_the_series():
    trace = SampledTrace(dt=10.0, values=[0.0, 10.0], unit=Unit.CELSIUS)
    with pytest.raises(OutOfRange):
        resample_linear(trace, [0.0, 20.0])


def test_resample_needs_uniform_targets():
    trace = SampledTrace(dt=10.0, values=[0.0, 10.0, 20.0], unit=Unit.CELSIUS)
    with pytest.raises(ValueError):
        resample_linear(trace, [0.0, 1.0, 5.0])

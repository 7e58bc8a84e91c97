"""
╔══════════════════════════════════════════════════════════════╗
║  SCENARIOS — one pipeline per subcommand                     ║
║                                                              ║
║    characterize-phase         Δf variance, span V and C      ║
║    characterize-polarization  wind power law of drift        ║
║    characterize-delay         thermal slope of flight time   ║
║    run-protocol               time-bin qubit session         ║
╚══════════════════════════════════════════════════════════════╝
"""

from enum import StrEnum
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from rich.console import Console

from ingest.weather import parse_weather_csv, synthetic_weather
from src.config import OUTPUT_DIR, SESSION_PATH, Calibration, load_calibration, load_yaml
from src.errors import ConfigError
from src.estimation.fits import fit_linear, fit_power_law, histogram
from src.estimation.phase import differentiate_phase, downsample, span_noise_from_traces
from src.estimation.polarization import polarization_drift_rate, rolling_mean, stokes_component
from src.estimation.resample import resample_linear
from src.estimation.spectral import psd_slope, spectrogram, welch_psd
from src.model.fiber import (Band, ChannelPath, ConfigurationKind, SpanId,
                             compose_configuration, differential_delay)
from src.model.trace import SampledTrace, Unit
from src.noise.params import CALIBRATION_RATE, RandomSeed
from src.noise.phase import integrate_phase, simulate_frequency_pair
from src.noise.polarization import simulate_polarization_walk, simulate_round_trip_polarization
from src.noise.thermal import differential_thermal_tau0, simulate_thermal_delay
from src.protocol.session import Session
from src.protocol.settings import load_session_config

console = Console()


class Pipeline(StrEnum):
    CHARACTERIZE_PHASE = "characterize-phase"
    CHARACTERIZE_POLARIZATION = "characterize-polarization"
    CHARACTERIZE_DELAY = "characterize-delay"
    RUN_PROTOCOL = "run-protocol"


DEFAULT_DURATION = {
    Pipeline.CHARACTERIZE_PHASE: 60.0,
    Pipeline.CHARACTERIZE_POLARIZATION: 86400.0,
    Pipeline.CHARACTERIZE_DELAY: 86400.0,
    Pipeline.RUN_PROTOCOL: 336.0,
}


class Scenario(BaseModel):
    model_config = ConfigDict(frozen=True)

    pipeline: Pipeline
    configuration: ConfigurationKind | None = None
    spans: list[SpanId] | None = None
    calibration: Path | None = None
    session: Path = SESSION_PATH
    session_overrides: dict[str, Any] = Field(default_factory=dict)
    wind: Path | None = Field(default=None, description="Wind CSV; synthetic weather when absent")
    temperature: Path | None = None
    seed: int = Field(default=0, ge=0)
    duration: float | None = Field(default=None, gt=0)
    output_dir: Path = OUTPUT_DIR

    # pipeline knobs
    sample_rate: float = Field(default=CALIBRATION_RATE, gt=0)
    psd_segment: int = Field(default=2**16, ge=2)
    psd_band: tuple[float, float] = (10.0, 1000.0)
    rolling_window: float = Field(default=600.0, gt=0)
    spectrogram_window: float = Field(default=600.0, gt=0)
    delay_cadence: float = Field(default=60.0, gt=0)
    span_mismatch: float = Field(default=0.01, ge=0)

    @property
    def run_duration(self) -> float:
        return self.duration or DEFAULT_DURATION[self.pipeline]

    def check_files(self) -> None:
        for label, path in (
            ("calibration", self.calibration),
            ("wind", self.wind),
            ("temperature", self.temperature),
        ):
            if path is not None and not Path(path).exists():
                raise ConfigError(f"{label} file not found: {path}")
        if self.pipeline == Pipeline.RUN_PROTOCOL and not Path(self.session).exists():
            raise ConfigError(f"session file not found: {self.session}")


def load_scenario(path: str | Path | None = None, **overrides) -> Scenario:
    """Scenario file values, then non-None overrides on top."""
    data = load_yaml(path) if path else {}
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return Scenario(**data)
    except ValidationError as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


class ScenarioResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    records: list[dict] = Field(default_factory=list)
    tables: dict[str, pd.DataFrame] = Field(default_factory=dict)


# ══════════════════════════════════════════════════════════════════════════════
# PIPELINES
# ══════════════════════════════════════════════════════════════════════════════


def _decimated(trace: SampledTrace, step: int, name: str) -> pd.DataFrame:
    return pd.DataFrame({"time_s": trace.timestamps[::step], f"{name}_{trace.unit}": trace.values[::step]})


def characterize_phase(scenario: Scenario, calibration: Calibration) -> ScenarioResult:
    span_a, span_b = calibration.select(scenario.spans or [SpanId.A, SpanId.B])
    seed = RandomSeed(seed=scenario.seed)
    freq_a, freq_b = simulate_frequency_pair(
        span_a.phase_params,
        span_a.length_m,
        scenario.run_duration,
        dt=1.0 / scenario.sample_rate,
        seed=seed,
    )
    phase_a, phase_b = integrate_phase(freq_a), integrate_phase(freq_b)
    # Differential sees φ_A − φ_B; the Round-Trip loop accumulates φ_A + φ_B
    phase_d = phase_a.with_values(phase_a.values - phase_b.values)
    phase_r = phase_a.with_values(phase_a.values + phase_b.values)

    freq_d = downsample(differentiate_phase(phase_d), CALIBRATION_RATE)
    freq_r = downsample(differentiate_phase(phase_r), CALIBRATION_RATE)
    # per-span traces recovered from the measured sum and difference
    estimate = span_noise_from_traces(
        freq_r.with_values(0.5 * (freq_r.values + freq_d.values)),
        freq_r.with_values(0.5 * (freq_r.values - freq_d.values)),
    )

    spectrum = welch_psd(phase_d, min(scenario.psd_segment, len(phase_d)))
    slope = psd_slope(spectrum, *scenario.psd_band)
    step = max(1, int(round(phase_d.sample_rate / 100.0)))

    records = estimate.to_records("phase") + [
        {"record": "phase.psd", "kind": "SpectrumSlope", "db_per_decade": slope,
         "f_lo": scenario.psd_band[0], "f_hi": scenario.psd_band[1]},
    ]
    tables = {
        "phase_traces": _decimated(phase_d, step, "differential").assign(
            **{f"round_trip_{phase_r.unit}": phase_r.values[::step]}
        ),
        "histogram_differential": histogram(freq_d.values),
        "histogram_round_trip": histogram(freq_r.values),
        "phase_psd": pd.DataFrame({"frequency_Hz": spectrum.frequencies, "power_rad2_per_Hz": spectrum.power}),
    }
    return ScenarioResult(records=records, tables=tables)


def _wind_trace(scenario: Scenario, dt: float) -> SampledTrace:
    duration = scenario.run_duration
    if scenario.wind:
        series = parse_weather_csv(scenario.wind)
    else:
        series = synthetic_weather("wind", duration=duration, seed=RandomSeed(seed=scenario.seed).child("wind"))
    n = int(np.floor(duration / dt + 1e-9)) + 1
    return resample_linear(series, dt * np.arange(n))


def _drift_power_law(stokes: SampledTrace, wind: SampledTrace, scenario: Scenario, name: str):
    rate = polarization_drift_rate(stokes).scaled(1e3, Unit.MRAD_PER_S)
    smoothed_rate = rolling_mean(rate, scenario.rolling_window)
    smoothed_wind = rolling_mean(wind.with_values(wind.values[: len(rate)]), scenario.rolling_window)
    fit = fit_power_law(smoothed_rate, smoothed_wind)
    table = pd.DataFrame(
        {
            "time_s": smoothed_rate.timestamps,
            f"{name}_drift_mrad/s": smoothed_rate.values,
            "wind_mph": smoothed_wind.values,
        }
    )
    return fit, table


def characterize_polarization(scenario: Scenario, calibration: Calibration) -> ScenarioResult:
    dt = 1.0
    seed = RandomSeed(seed=scenario.seed)
    wind = _wind_trace(scenario, dt)
    span_a, span_b = calibration.select(scenario.spans or [SpanId.A, SpanId.B])

    one_way = simulate_polarization_walk(span_a.pol_params, wind, dt, seed=seed.child("one-way"))
    round_trip = simulate_round_trip_polarization(
        span_a.pol_params, span_b.pol_params, calibration.round_trip_polarization, wind, dt, seed=seed.child("round-trip")
    )
    fit_d, table_d = _drift_power_law(one_way, wind, scenario, "differential")
    fit_r, table_r = _drift_power_law(round_trip, wind, scenario, "round_trip")

    s1 = stokes_component(one_way, 0)
    windows = spectrogram(s1, scenario.spectrogram_window)
    window_power = pd.DataFrame(
        {
            "t_start_s": [w.t_start for w in windows],
            "total_power": [w.total_power() for w in windows],
            "lowest_bin_Hz": [w.frequencies[1] for w in windows],
        }
    )
    spectrum = welch_psd(s1, min(4096, len(s1)))
    f_hi = min(0.1, spectrum.frequencies[-1])
    slope = psd_slope(spectrum, f_hi / 10.0, f_hi)

    records = [
        fit_d.to_record("polarization.differential"),
        fit_r.to_record("polarization.round_trip"),
        {"record": "polarization.s1_psd", "kind": "SpectrumSlope", "db_per_decade": slope,
         "f_lo": f_hi / 10.0, "f_hi": f_hi},
    ]
    tables = {
        "stokes_differential": pd.DataFrame(
            {"time_s": one_way.timestamps[::60], "S1": one_way.values[::60, 0],
             "S2": one_way.values[::60, 1], "S3": one_way.values[::60, 2]}
        ),
        "drift_differential": table_d,
        "drift_round_trip": table_r,
        "spectrogram_s1": window_power,
    }
    return ScenarioResult(records=records, tables=tables)


def _temperature_trace(scenario: Scenario) -> SampledTrace:
    if scenario.temperature:
        series = parse_weather_csv(scenario.temperature)
    else:
        series = synthetic_weather(
            "temperature", duration=scenario.run_duration, cadence=3600.0,
            seed=RandomSeed(seed=scenario.seed).child("temperature"),
        )
    n = int(np.floor(scenario.run_duration / scenario.delay_cadence + 1e-9)) + 1
    return resample_linear(series, scenario.delay_cadence * np.arange(n))


def characterize_delay(scenario: Scenario, calibration: Calibration) -> ScenarioResult:
    temperature = _temperature_trace(scenario)
    span_a, span_b = calibration.select(scenario.spans or [SpanId.A, SpanId.B])
    differential = ChannelPath(
        config=compose_configuration([span_a, span_b], ConfigurationKind.DIFFERENTIAL),
        group_index=calibration.group_index,
    )
    round_trip = ChannelPath(
        config=compose_configuration([span_a, span_b], ConfigurationKind.ROUND_TRIP),
        group_index=calibration.group_index,
    )

    delay_r = simulate_thermal_delay(span_a.thermal_params, temperature, calibration.tau0_one_way_sum)
    delay_d = simulate_thermal_delay(
        span_a.thermal_params,
        temperature,
        differential_thermal_tau0(calibration.tau0_round_trip, scenario.span_mismatch),
    )
    fit_r = fit_linear(delay_r, temperature)
    fit_d = fit_linear(delay_d, temperature)

    records = [
        {"record": "delay.nominal", "kind": "NominalDelay",
         "tau_differential": differential_delay(differential), "tau_round_trip": round_trip.tau0},
        fit_d.to_record("delay.differential"),
        fit_r.to_record("delay.round_trip"),
    ]
    tables = {
        "delay_vs_temperature": pd.DataFrame(
            {
                "time_s": temperature.timestamps,
                "temperature_degC": temperature.values,
                "differential_delay_s": delay_d.values,
                "round_trip_delay_s": delay_r.values,
            }
        )
    }
    return ScenarioResult(records=records, tables=tables)


def run_protocol(scenario: Scenario, calibration: Calibration) -> ScenarioResult:
    config = load_session_config(scenario.session, **scenario.session_overrides)
    kind = scenario.configuration or ConfigurationKind.THREE_NODE
    default_spans = [SpanId.A, SpanId.C, SpanId.D] if kind == ConfigurationKind.THREE_NODE else [SpanId.A, SpanId.B]
    spans = calibration.select(scenario.spans or default_spans)
    channel = ChannelPath(
        config=compose_configuration(spans, kind), wavelength=Band.NM1350, group_index=calibration.group_index
    )
    wind = _wind_trace(scenario, config.polarization_sample_period) if scenario.wind else None
    result = Session(config, channel, scenario.run_duration, seed=scenario.seed, wind=wind).run()
    tables = {"session_events": result.events, "session_words": result.words, "session_blocks": result.blocks}
    return ScenarioResult(records=result.report.to_records("session"), tables=tables)


PIPELINES = {
    Pipeline.CHARACTERIZE_PHASE: characterize_phase,
    Pipeline.CHARACTERIZE_POLARIZATION: characterize_polarization,
    Pipeline.CHARACTERIZE_DELAY: characterize_delay,
    Pipeline.RUN_PROTOCOL: run_protocol,
}


def run_scenario(scenario: Scenario) -> ScenarioResult:
    scenario.check_files()
    calibration = load_calibration(scenario.calibration)
    console.log(f"[bold cyan]{scenario.pipeline}[/] seed={scenario.seed} duration={scenario.run_duration:g}s")
    return PIPELINES[scenario.pipeline](scenario, calibration)

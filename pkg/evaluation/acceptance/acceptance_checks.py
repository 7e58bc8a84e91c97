import math
import tempfile
from pathlib import Path

import numpy as np

from src.cli.scenario import Pipeline, Scenario, run_scenario
from src.config import ROOT_DIR
from src.estimation.phase import span_noise_from_traces, span_variance_covariance
from src.estimation.polarization import polarization_drift_rate
from src.estimation.spectral import psd_slope, welch_psd
from src.main import execute
from src.model.trace import SampledTrace, Unit
from src.noise.params import CALIBRATION_RATE, PhaseNoiseParams, PolarizationDriftParams, RandomSeed
from src.noise.phase import integrate_phase, simulate_frequency_pair
from src.noise.polarization import simulate_polarization_walk
from src.protocol.codebook import build_codebook, decode_command, hamming, single_deletions
from src.protocol.polarization import PolarizationTracker
from src.protocol.qubit import jitter_offsets, simulate_bin_assignment_errors
from src.protocol.settings import SessionConfig
from src.protocol.tdi import TDIState, drift_tdi, fringe_phase_error, tdi_lock

# Every check returns {"value", "target", "pass", "details"}; "value" is the
# headline number logged to MLflow.


def _result(value: float, target: str, passed: bool, details: str = "") -> dict:
    return {"value": float(value), "target": target, "pass": bool(passed), "details": details}


def _relative(actual: float, expected: float) -> float:
    return abs(actual - expected) / abs(expected)


def _record(records: list[dict], name: str) -> dict:
    return next(r for r in records if r["record"] == name)


# ══════════════════════════════════════════════════════════════════════════════
# PHASE
# ══════════════════════════════════════════════════════════════════════════════


def variance_algebra(
    v_differential: float,
    v_round_trip: float,
    expected_variance: float,
    expected_covariance: float,
    rounding_tolerance: float,
) -> dict:
    variance, covariance = span_variance_covariance(v_differential, v_round_trip)
    exact = (
        _relative(variance, (v_round_trip + v_differential) / 4.0) < 1e-9
        and _relative(covariance, (v_round_trip - v_differential) / 4.0) < 1e-9
    )
    # the quoted V and C were computed from unrounded V_D and V_R
    quoted = (
        _relative(variance, expected_variance) < rounding_tolerance
        and _relative(covariance, expected_covariance) < rounding_tolerance
    )
    return _result(
        variance,
        f"V≈{expected_variance:.3g}, C≈{expected_covariance:.3g}",
        exact and quoted,
        f"V={variance:.6g} C={covariance:.6g}",
    )


def phase_closure(
    duration: float, seed: int, expected_differential: float, expected_round_trip: float, tolerance: float
) -> dict:
    scenario = Scenario(pipeline=Pipeline.CHARACTERIZE_PHASE, seed=seed, duration=duration)
    records = run_scenario(scenario).records
    v_d = _record(records, "phase.V_D")["variance"]
    v_r = _record(records, "phase.V_R")["variance"]
    passed = _relative(v_d, expected_differential) < tolerance and _relative(v_r, expected_round_trip) < tolerance
    return _result(v_d, f"V_D, V_R within {tolerance:.0%}", passed, f"V_D={v_d:.4g} V_R={v_r:.4g}")


def length_scaling(short_m: float, long_m: float, n_samples: int, seed: int, tolerance: float) -> dict:
    duration = n_samples / CALIBRATION_RATE
    seed = RandomSeed(seed=seed)
    estimates = []
    for i, length in enumerate((short_m, long_m)):
        a, b = simulate_frequency_pair(PhaseNoiseParams(), length, duration, seed=seed.child(i))
        estimates.append(span_noise_from_traces(a, b).variance)
    ratio = estimates[1] / estimates[0]
    expected = long_m / short_m
    return _result(ratio, f"{expected:g} ± {tolerance:.0%}", _relative(ratio, expected) < tolerance)


def psd_slope_check(
    duration: float, segment_length: int, band: list[float], seed: int, expected: float, tolerance: float
) -> dict:
    freq, _ = simulate_frequency_pair(PhaseNoiseParams(), 42_500.0, duration, seed=seed)
    spectrum = welch_psd(integrate_phase(freq), segment_length)
    slope = psd_slope(spectrum, *band)
    return _result(slope, f"{expected:g} ± {tolerance:g} dB/decade", abs(slope - expected) <= tolerance)


# ══════════════════════════════════════════════════════════════════════════════
# POLARIZATION
# ══════════════════════════════════════════════════════════════════════════════


def polarization_closure(
    duration: float,
    seed: int,
    expected_kappa: float,
    expected_n: float,
    kappa_tolerance: float,
    n_tolerance: float,
) -> dict:
    scenario = Scenario(pipeline=Pipeline.CHARACTERIZE_POLARIZATION, seed=seed, duration=duration)
    fit = _record(run_scenario(scenario).records, "polarization.differential")
    passed = (
        abs(fit["n_exponent"] - expected_n) <= n_tolerance
        and _relative(fit["kappa"], expected_kappa) <= kappa_tolerance
    )
    return _result(
        fit["n_exponent"],
        f"n={expected_n}±{n_tolerance}, κ={expected_kappa}±{kappa_tolerance:.0%}",
        passed,
        f"κ={fit['kappa']:.4g} n={fit['n_exponent']:.4g} adj_R²={fit['adj_r_squared']:.3f}",
    )


def rayleigh_mean(wind_mph: float, n_steps: int, seed: int, tolerance: float) -> dict:
    params = PolarizationDriftParams.one_way()
    wind = SampledTrace(dt=1.0, values=np.full(n_steps + 1, wind_mph), unit=Unit.MPH)
    stokes = simulate_polarization_walk(params, wind, 1.0, seed=seed)
    mean_step = float(np.mean(polarization_drift_rate(stokes).values))
    expected = float(params.mean_rate(wind_mph))
    return _result(mean_step, f"{expected:.4g} rad/s ± {tolerance:.0%}", _relative(mean_step, expected) < tolerance)


def polarization_residual(max_wind_mph: float, n_trials: int, seed: int, tolerance_deg: float) -> dict:
    params = PolarizationDriftParams.one_way()
    config = SessionConfig()
    residuals = []
    for wind_mph in np.linspace(0.0, max_wind_mph, 4):
        for trial in range(n_trials):
            tracker = PolarizationTracker(
                params,
                float(wind_mph),
                duration=2 * config.polarization_period + config.polarization_reference,
                seed=RandomSeed(seed=seed).child("residual", trial),
                loop_period=config.polarization_loop_period,
                resolution=math.radians(config.waveplate_resolution_deg),
            )
            residuals += [
                tracker.reference_window(k * config.polarization_period, config.polarization_reference)
                for k in range(3)
            ]
    worst = math.degrees(max(residuals))
    return _result(
        worst, f"< {tolerance_deg:g}° at every PolRef close, W ≤ {max_wind_mph:g} mph", worst < tolerance_deg,
        f"{len(residuals)} windows",
    )


# ══════════════════════════════════════════════════════════════════════════════
# DELAY
# ══════════════════════════════════════════════════════════════════════════════


def thermal_slope(
    temperature: str, expected_slope: float, tolerance: float, differential_range: list[float]
) -> dict:
    scenario = Scenario(pipeline=Pipeline.CHARACTERIZE_DELAY, temperature=ROOT_DIR / temperature)
    records = run_scenario(scenario).records
    slope = _record(records, "delay.round_trip")["slope"]
    residual = _record(records, "delay.differential")["slope"]
    low, high = differential_range
    passed = _relative(slope, expected_slope) <= tolerance and low <= residual <= high
    return _result(
        slope,
        f"{expected_slope:.4g} s/°C ± {tolerance:.1%}",
        passed,
        f"differential residual {residual * 1e12:.1f} ps/°C",
    )


# ══════════════════════════════════════════════════════════════════════════════
# PROTOCOL
# ══════════════════════════════════════════════════════════════════════════════


def codec_soundness() -> dict:
    codebook = build_codebook()
    wrong = 0
    for word in codebook:
        for received in single_deletions(word.symbols):
            decoded = decode_command(received, codebook)
            if not decoded.erased and decoded.word != word:
                wrong += 1
    min_distance = min(
        hamming(a.symbols, b.symbols) for i, a in enumerate(codebook.words) for b in codebook.words[i + 1 :]
    )
    return _result(wrong, "0 wrong decodes, d ≥ 2", wrong == 0 and min_distance >= 2, f"d_min={min_distance}")


def timing_jitter(jitter: float, n_events: int, n_trials: int, seed: int, tolerance: float) -> dict:
    seed = RandomSeed(seed=seed)
    std = float(np.std(jitter_offsets(n_events, jitter, seed.child("std")), ddof=1))
    errors = simulate_bin_assignment_errors(n_trials, jitter, seed=seed.child("bins"))
    passed = _relative(std, jitter) < tolerance and errors == 0
    return _result(std, f"{jitter:.3g} s ± {tolerance:.0%}, 0 bin errors", passed, f"bin errors={errors}")


def _session(seed: int, duration: float, **overrides) -> dict:
    scenario = Scenario(
        pipeline=Pipeline.RUN_PROTOCOL, seed=seed, duration=duration, session_overrides=overrides
    )
    return _record(run_scenario(scenario).records, "session")


def session_ber(duration: float, seed: int, ber_range: list[float], ideal_max: float) -> dict:
    calibrated = _session(seed, duration)
    ideal = _session(seed, duration, visibility=1.0, timing_jitter=0.0, tdi_drift_rate=0.0)
    low, high = ber_range
    passed = low <= calibrated["ber_mean"] <= high and ideal["ber_mean"] < ideal_max
    return _result(
        calibrated["ber_mean"],
        f"[{low:.1%}, {high:.1%}], ideal < {ideal_max:.1%}",
        passed,
        f"ideal BER={ideal['ber_mean']:.2e} detections={calibrated['n_detected']}",
    )


def loss_not_error(
    duration: float, seed: int, reference_loss_db: float, extra_loss_db: float, ratio_tolerance: float, max_sigma: float
) -> dict:
    base = _session(seed, duration, reference_loss_db=reference_loss_db)
    lossy = _session(seed, duration, reference_loss_db=reference_loss_db, conversion_loss_db=extra_loss_db)
    attenuation = 10.0 ** (extra_loss_db / 10.0)
    ratio = base["n_detected"] / lossy["n_detected"]
    sigma = math.hypot(base["ber_std_error"], lossy["ber_std_error"])
    shift = abs(base["ber_mean"] - lossy["ber_mean"])
    passed = _relative(ratio, attenuation) < ratio_tolerance and shift < max_sigma * sigma
    return _result(
        ratio,
        f"{attenuation:.3g} ± {ratio_tolerance:.0%}, ΔBER < {max_sigma:g}σ",
        passed,
        f"ΔBER={shift:.2e} σ={sigma:.2e}",
    )


def tdi_lock_hold(seed: int, injected_drift: float, error_range: list[float]) -> dict:
    rng = RandomSeed(seed=seed).child("initial-imbalance").generator()
    start = TDIState(path_imbalance=float(rng.uniform(0.0, TDIState().wavelength)))
    result = tdi_lock(start, window=1.0, seed=seed)
    held = drift_tdi(result.state, 10.0, 0.0)
    drifted = drift_tdi(result.state, 1.0, injected_drift)
    error = fringe_phase_error(drifted)
    low, high = error_range
    passed = (
        result.converged
        and held.path_imbalance == result.state.path_imbalance
        and low <= error <= high
    )
    return _result(
        error,
        f"converged, held, fringe error in [{low:.1%}, {high:.1%}]",
        passed,
        f"converged at step {result.converged_step} of {result.n_steps}",
    )


# ══════════════════════════════════════════════════════════════════════════════
# DETERMINISM
# ══════════════════════════════════════════════════════════════════════════════


def byte_identical_reports(pipeline: str, duration: float, seed: int) -> dict:
    contents = []
    with tempfile.TemporaryDirectory() as tmp:
        for run in ("first", "second"):
            scenario = Scenario(pipeline=pipeline, seed=seed, duration=duration, output_dir=Path(tmp) / run)
            out_dir = execute(scenario)
            contents.append({p.name: p.read_bytes() for p in sorted(out_dir.iterdir())})
    identical = contents[0] == contents[1]
    return _result(float(identical), "identical output directories", identical, f"{len(contents[0])} files")


CHECKS = {
    "variance_algebra": variance_algebra,
    "phase_closure": phase_closure,
    "length_scaling": length_scaling,
    "psd_slope": psd_slope_check,
    "polarization_closure": polarization_closure,
    "rayleigh_mean": rayleigh_mean,
    "polarization_residual": polarization_residual,
    "thermal_slope": thermal_slope,
    "codec_soundness": codec_soundness,
    "timing_jitter": timing_jitter,
    "session_ber": session_ber,
    "loss_not_error": loss_not_error,
    "tdi_lock_hold": tdi_lock_hold,
    "byte_identical_reports": byte_identical_reports,
}

"""Phase-noise characterization: from measured phase to per-span V and C."""

import math
import warnings

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.errors import InvalidRate, RateTooHigh, TooShort, UnphysicalCovarianceWarning
from src.estimation.fits import GaussianFit, fit_gaussian_variance
from src.model.trace import SampledTrace, Unit

RATE_RATIO_TOLERANCE = 1e-6


def differentiate_phase(phase: SampledTrace) -> SampledTrace:
    """Δf_k = (φ_{k+1} − φ_k)/(2π·dt), one sample shorter than the input."""
    phase.require(Unit.RADIANS)
    if len(phase) < 2:
        raise TooShort("differentiation needs at least two phase samples")
    freq = np.diff(phase.values) / (2.0 * np.pi * phase.dt)
    return phase.with_values(freq, unit=Unit.HERTZ)


def downsample(trace: SampledTrace, target_rate: float) -> SampledTrace:
    """Block-mean decimation by an integer factor; a trailing partial block is dropped."""
    if target_rate <= 0:
        raise InvalidRate(f"target rate must be positive, got {target_rate}")
    ratio = trace.sample_rate / target_rate
    if ratio < 1.0 - RATE_RATIO_TOLERANCE:
        raise RateTooHigh(
            f"cannot downsample {trace.sample_rate:.6g} Hz to a higher {target_rate:.6g} Hz"
        )
    factor = int(round(ratio))
    if abs(ratio - factor) > RATE_RATIO_TOLERANCE * ratio:
        raise InvalidRate(f"{trace.sample_rate:.6g} Hz is not an integer multiple of {target_rate:.6g} Hz")
    if factor == 1:
        return trace

    n_blocks = len(trace) // factor
    if n_blocks == 0:
        raise TooShort(f"trace of {len(trace)} samples is shorter than one block of {factor}")
    kept = trace.values[: n_blocks * factor]
    blocks = kept.reshape(n_blocks, factor, *kept.shape[1:]).mean(axis=1)
    if trace.unit == Unit.STOKES:
        blocks /= np.linalg.norm(blocks, axis=1, keepdims=True)
    return trace.with_values(blocks, dt=trace.dt * factor)


def span_variance_covariance(v_differential: float, v_round_trip: float) -> tuple[float, float]:
    """Per-span (V, C) from the Differential and Round-Trip variances.

    V_D = 2V − 2C and V_R = 2V + 2C, so V = (V_R + V_D)/4 and C = (V_R − V_D)/4.
    """
    if v_differential < 0 or v_round_trip < 0:
        raise ValueError("variances must be non-negative")
    variance = (v_round_trip + v_differential) / 4.0
    covariance = (v_round_trip - v_differential) / 4.0
    if abs(covariance) > variance:
        warnings.warn(
            f"|C| = {abs(covariance):.6g} exceeds V = {variance:.6g}: correlation above 1",
            UnphysicalCovarianceWarning,
            stacklevel=2,
        )
    return variance, covariance


class SpanNoiseEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    differential: GaussianFit
    round_trip: GaussianFit
    variance: float
    covariance: float

    @property
    def correlation(self) -> float:
        return self.covariance / self.variance if self.variance > 0 else math.nan

    def to_records(self, prefix: str = "phase") -> list[dict]:
        return [
            self.differential.to_record(f"{prefix}.V_D"),
            self.round_trip.to_record(f"{prefix}.V_R"),
            {
                "record": f"{prefix}.span",
                "kind": "SpanNoise",
                "variance": self.variance,
                "covariance": self.covariance,
                "correlation": self.correlation,
            },
        ]


def span_noise_from_traces(freq_a: SampledTrace, freq_b: SampledTrace) -> SpanNoiseEstimate:
    """V_D from Δf_A − Δf_B and V_R from Δf_A + Δf_B, then the per-span algebra."""
    freq_a.require(Unit.HERTZ)
    freq_b.require(Unit.HERTZ)
    if len(freq_a) != len(freq_b):
        raise ValueError(f"frequency traces differ in length ({len(freq_a)} vs {len(freq_b)})")
    differential = fit_gaussian_variance(freq_a.values - freq_b.values)
    round_trip = fit_gaussian_variance(freq_a.values + freq_b.values)
    variance, covariance = span_variance_covariance(differential.variance, round_trip.variance)
    return SpanNoiseEstimate(
        differential=differential,
        round_trip=round_trip,
        variance=variance,
        covariance=covariance,
    )

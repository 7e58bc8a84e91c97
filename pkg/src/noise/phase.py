"""Optical phase and frequency noise of copropagating spans.

Frequency noise is white at the analysis rate: each sample of Δf is an
independent Gaussian draw and the phase is its running sum (a Brownian
process). Two copropagating spans share a common-mode component.
"""

import math

import numpy as np
from scipy.signal import lfilter

from src.errors import InvalidRate, RateTooLow, TooShort
from src.model.trace import SampledTrace, Unit
from src.noise.params import (CALIBRATION_RATE, PhaseNoiseParams,
                              PhaseStabilizerParams, RandomSeed, as_seed)


def simulate_frequency_pair(
    params: PhaseNoiseParams,
    length: float,
    duration: float,
    dt: float = 1.0 / CALIBRATION_RATE,
    seed: RandomSeed | int = 0,
) -> tuple[SampledTrace, SampledTrace]:
    """Δf of two copropagating spans of `length` metres.

    Each trace has variance V = v·L at the calibration rate and the pair has
    covariance C = covariance_fraction·V. At other rates the per-sample
    variance is scaled so that block-mean downsampling to the calibration
    rate gives back V.
    """
    if dt <= 0:
        raise InvalidRate(f"dt must be positive, got {dt}")
    if duration < dt:
        raise TooShort(f"duration {duration} s is shorter than one sample ({dt} s)")

    n = int(round(duration / dt))
    rate_scale = (1.0 / dt) / params.calibration_rate
    variance = params.variance(length) * rate_scale
    covariance = params.covariance_fraction * variance

    rng = as_seed(seed).child("phase", "frequency-pair").generator()
    z = rng.standard_normal((3, n))
    common = math.sqrt(covariance) * z[0]
    independent = math.sqrt(max(variance - covariance, 0.0))

    f_a = common + independent * z[1]
    f_b = common + independent * z[2]
    return (
        SampledTrace(dt=dt, values=f_a, unit=Unit.HERTZ),
        SampledTrace(dt=dt, values=f_b, unit=Unit.HERTZ),
    )


def integrate_phase(freq: SampledTrace) -> SampledTrace:
    """φ_{k+1} = φ_k + 2π·Δf_k·dt with φ_0 = 0 (one sample longer than the input)."""
    freq.require(Unit.HERTZ)
    steps = 2.0 * np.pi * freq.values * freq.dt
    phase = np.concatenate(([0.0], np.cumsum(steps)))
    return freq.with_values(phase, unit=Unit.RADIANS)


def stabilize_phase(phase: SampledTrace, params: PhaseStabilizerParams) -> SampledTrace:
    """Residual phase behind a first-order stabilization loop.

    The closed-loop error transfer of a first-order loop is a single-pole
    high-pass with its corner at the loop bandwidth. The filter starts from
    the first input sample, so a constant offset decays to zero.
    """
    phase.require(Unit.RADIANS)
    bandwidth = params.bandwidth_3db
    if phase.sample_rate < 2.0 * bandwidth:
        raise RateTooLow(
            f"sample rate {phase.sample_rate:.3g} Hz cannot resolve a {bandwidth:.3g} Hz loop"
        )
    a = math.exp(-2.0 * math.pi * bandwidth * phase.dt)
    x = phase.values
    residual, _ = lfilter([a, -a], [1.0, -a], x, zi=[(1.0 - a) * x[0]])
    return phase.with_values(residual)

"""Time-bin qubits carved out of the 1350 nm reference light."""

import math
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import RateTooLow
from src.model.trace import SampledTrace, Unit
from src.noise.params import RandomSeed, as_seed

BIN_SPACING = 144.5e-9
PULSE_FWHM = 45e-9
MIN_CARVE_RATE = 1e9
DEFAULT_CARVE_RATE = 2e9
NORMALIZATION_TOLERANCE = 1e-9


class TimeBinQubit(BaseModel):
    model_config = ConfigDict(frozen=True)

    amp_early: float
    amp_late: float
    relative_phase: float = Field(default=0.0, description="Phase of the late bin (rad)")
    bin_spacing: float = Field(default=BIN_SPACING, gt=0)
    pulse_fwhm: float = Field(default=PULSE_FWHM, gt=0)

    @model_validator(mode="after")
    def _normalized(self):
        norm = self.amp_early**2 + self.amp_late**2
        if abs(norm - 1.0) > NORMALIZATION_TOLERANCE:
            raise ValueError(f"amp_early² + amp_late² must be 1, got {norm}")
        return self

    @classmethod
    def plus(cls, **kwargs) -> "TimeBinQubit":
        return cls(amp_early=math.sqrt(0.5), amp_late=math.sqrt(0.5), relative_phase=0.0, **kwargs)

    @classmethod
    def minus(cls, **kwargs) -> "TimeBinQubit":
        return cls(amp_early=math.sqrt(0.5), amp_late=math.sqrt(0.5), relative_phase=math.pi, **kwargs)

    @classmethod
    def early(cls, **kwargs) -> "TimeBinQubit":
        return cls(amp_early=1.0, amp_late=0.0, **kwargs)

    @classmethod
    def late(cls, **kwargs) -> "TimeBinQubit":
        return cls(amp_early=0.0, amp_late=1.0, **kwargs)

    @classmethod
    def for_bit(cls, bit: int, **kwargs) -> "TimeBinQubit":
        """X-basis encoding: 0 → |+⟩, 1 → |−⟩."""
        return cls.minus(**kwargs) if bit else cls.plus(**kwargs)


def lorentzian(t, center: float, fwhm: float) -> np.ndarray:
    """Unit-area Lorentzian intensity profile."""
    half = fwhm / 2.0
    return (half / np.pi) / ((np.asarray(t, dtype=float) - center) ** 2 + half**2)


class CarvedWaveform(BaseModel):
    model_config = ConfigDict(frozen=True)

    trace: SampledTrace
    early_center: float
    late_center: float
    late_phase: float
    qubit: TimeBinQubit

    def shifted(self, offset: float) -> "CarvedWaveform":
        return self.model_copy(
            update={
                "trace": self.trace.with_values(self.trace.values, t0=self.trace.t0 + offset),
                "early_center": self.early_center + offset,
                "late_center": self.late_center + offset,
            }
        )


def carve_time_bins(
    qubit: TimeBinQubit,
    t0: float = 0.0,
    sample_rate: float = DEFAULT_CARVE_RATE,
    margin: float = 200e-9,
) -> CarvedWaveform:
    """Two Lorentzian envelopes centred at t0 and t0 + bin_spacing, areas ∝ amp²."""
    if sample_rate < MIN_CARVE_RATE:
        raise RateTooLow(f"carving needs ≥ {MIN_CARVE_RATE:.0e} S/s to resolve a 45 ns pulse")
    dt = 1.0 / sample_rate
    start = t0 - margin
    n = int(round((qubit.bin_spacing + 2.0 * margin) / dt)) + 1
    t = start + dt * np.arange(n)

    late_center = t0 + qubit.bin_spacing
    intensity = qubit.amp_early**2 * lorentzian(t, t0, qubit.pulse_fwhm) + qubit.amp_late**2 * lorentzian(
        t, late_center, qubit.pulse_fwhm
    )
    return CarvedWaveform(
        trace=SampledTrace(t0=start, dt=dt, values=intensity, unit=Unit.INTENSITY),
        early_center=t0,
        late_center=late_center,
        late_phase=qubit.relative_phase,
        qubit=qubit,
    )


# ── timing jitter ─────────────────────────────────────────────────────────────


def jitter_offsets(n_events: int, jitter_std: float, seed: RandomSeed | int = 0) -> np.ndarray:
    """Gaussian time-of-arrival offsets, one per trigger event (s)."""
    if jitter_std < 0:
        raise ValueError(f"jitter must be non-negative, got {jitter_std}")
    if jitter_std == 0:
        return np.zeros(n_events)
    rng = as_seed(seed).child("protocol", "jitter").generator()
    return rng.normal(0.0, jitter_std, n_events)


def apply_timing_jitter(
    waveforms: CarvedWaveform | Sequence[CarvedWaveform],
    jitter_std: float,
    seed: RandomSeed | int = 0,
):
    """Shift each waveform by its own trigger offset; a single waveform stays single."""
    single = isinstance(waveforms, CarvedWaveform)
    batch = [waveforms] if single else list(waveforms)
    offsets = jitter_offsets(len(batch), jitter_std, seed)
    shifted = [w if offset == 0 else w.shifted(float(offset)) for w, offset in zip(batch, offsets)]
    return shifted[0] if single else shifted


def bin_assignment_errors(offsets, bin_spacing: float = BIN_SPACING) -> int:
    """Detections pushed past the half-way point into a neighbouring bin."""
    return int(np.count_nonzero(np.abs(np.asarray(offsets)) >= bin_spacing / 2.0))


def simulate_bin_assignment_errors(
    n_trials: int,
    jitter_std: float,
    bin_spacing: float = BIN_SPACING,
    seed: RandomSeed | int = 0,
    chunk: int = 1_000_000,
) -> int:
    seed = as_seed(seed)
    errors = 0
    for i, start in enumerate(range(0, n_trials, chunk)):
        size = min(chunk, n_trials - start)
        errors += bin_assignment_errors(jitter_offsets(size, jitter_std, seed.child(i)), bin_spacing)
    return errors

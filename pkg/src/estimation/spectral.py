"""Welch power spectral densities and drift spectrograms."""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.signal import welch

from src.errors import RangeEmpty, TooShort
from src.model.trace import SampledTrace, Unit

WINDOW = "hann"


class SpectrumEstimate(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    frequencies: np.ndarray = Field(description="Hz, strictly increasing")
    power: np.ndarray = Field(description="unit²/Hz, non-negative")
    unit: Unit
    window: str = WINDOW
    segment_length: int
    overlap: int
    t_start: float = Field(default=0.0, description="First timestamp of the analysed samples (s)")

    @property
    def resolution(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0]) if len(self.frequencies) > 1 else 0.0

    def total_power(self) -> float:
        """∫P df over the one-sided spectrum."""
        return float(np.sum(self.power) * self.resolution)


def welch_psd(trace: SampledTrace, segment_length: int, overlap: int | None = None) -> SpectrumEstimate:
    """One-sided density with Hann windows and 50% segment overlap."""
    if trace.unit == Unit.STOKES:
        raise ValueError("welch_psd takes a scalar trace; pick a Stokes component first")
    if segment_length < 2:
        raise TooShort(f"segment length must be at least two samples, got {segment_length}")
    if segment_length > len(trace):
        raise TooShort(f"segment of {segment_length} samples exceeds the trace ({len(trace)})")
    overlap = segment_length // 2 if overlap is None else overlap
    frequencies, power = welch(
        trace.values,
        fs=trace.sample_rate,
        window=WINDOW,
        nperseg=segment_length,
        noverlap=overlap,
        scaling="density",
    )
    return SpectrumEstimate(
        frequencies=frequencies,
        power=np.maximum(power, 0.0),
        unit=trace.unit,
        segment_length=segment_length,
        overlap=overlap,
        t_start=trace.t0,
    )


def psd_slope(spec: SpectrumEstimate, f_lo: float, f_hi: float) -> float:
    """Least-squares slope of 10·log10 P against log10 f, in dB per decade."""
    if not f_lo < f_hi:
        raise RangeEmpty(f"empty band [{f_lo}, {f_hi}] Hz")
    f, p = spec.frequencies, spec.power
    band = (f >= f_lo) & (f <= f_hi) & (f > 0) & (p > 0)
    if np.count_nonzero(band) < 2:
        raise RangeEmpty(f"fewer than two spectral bins in [{f_lo}, {f_hi}] Hz")
    slope, _ = np.polyfit(np.log10(f[band]), np.log10(p[band]), 1)
    return float(10.0 * slope)


def spectrogram(trace: SampledTrace, window: float) -> list[SpectrumEstimate]:
    """One single-segment PSD per non-overlapping window of `window` seconds.

    The lowest resolvable frequency is 1/window.
    """
    samples = int(round(window / trace.dt))
    if samples < 2:
        raise TooShort(f"window {window} s holds fewer than two samples")
    n_windows = len(trace) // samples
    if n_windows == 0:
        raise TooShort(f"trace of {trace.duration} s is shorter than one {window} s window")
    spectra = []
    for k in range(n_windows):
        chunk = trace.values[k * samples : (k + 1) * samples]
        segment = trace.with_values(chunk, t0=trace.t0 + k * samples * trace.dt)
        spectra.append(welch_psd(segment, segment_length=samples, overlap=0))
    return spectra

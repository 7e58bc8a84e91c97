import numpy as np
import pandas as pd

from src.errors import TooShort
from src.model.trace import SampledTrace, Unit


def polarization_drift_rate(stokes: SampledTrace) -> SampledTrace:
    """Great-circle angle between successive Stokes samples, per second."""
    stokes.require(Unit.STOKES)
    if len(stokes) < 2:
        raise TooShort("a drift rate needs at least two Stokes samples")
    p = stokes.values
    dots = np.clip(np.einsum("ij,ij->i", p[:-1], p[1:]), -1.0, 1.0)
    return stokes.with_values(np.arccos(dots) / stokes.dt, unit=Unit.RAD_PER_S)


def stokes_component(stokes: SampledTrace, index: int) -> SampledTrace:
    """One Stokes parameter (0 → S1, 1 → S2, 2 → S3) as a scalar trace."""
    stokes.require(Unit.STOKES)
    return stokes.with_values(stokes.values[:, index], unit=Unit.DIMENSIONLESS)


def rolling_mean(trace: SampledTrace, window: float) -> SampledTrace:
    """Centered moving average over `window` seconds.

    The window spans round(window/dt) samples, so a step becomes a ramp exactly
    `window` wide. Even windows sit half a sample early; at the edges only the
    available samples are averaged.
    """
    if trace.unit == Unit.STOKES:
        raise ValueError("rolling_mean takes a scalar trace")
    if window < trace.dt * (1.0 - 1e-9):
        raise ValueError(f"window {window} s is shorter than one sample ({trace.dt} s)")
    samples = max(1, int(round(window / trace.dt)))
    if samples == 1:
        return trace
    smoothed = pd.Series(trace.values).rolling(samples, center=True, min_periods=1).mean()
    return trace.with_values(smoothed.to_numpy())

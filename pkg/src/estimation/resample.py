import numpy as np

from src.errors import OutOfRange
from src.model.trace import SampledTrace

UNIFORM_TOLERANCE = 1e-6


def _source_points(series) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(series, SampledTrace):
        return series.timestamps, series.values
    # EnvironmentSeries: irregular samples, seconds since the first reading
    return np.asarray(series.seconds, dtype=float), np.asarray(series.values, dtype=float)


def resample_linear(series, target_timestamps) -> SampledTrace:
    """Piecewise-linear interpolation onto uniformly spaced target timestamps (s)."""
    source_t, source_v = _source_points(series)
    target = np.asarray(target_timestamps, dtype=float)
    if target.size == 0:
        raise OutOfRange("no target timestamps")
    if source_v.ndim != 1:
        raise ValueError("resample_linear takes a scalar series")

    span = max(abs(source_t[-1] - source_t[0]), 1.0)
    slack = 1e-9 * span
    if target.min() < source_t[0] - slack or target.max() > source_t[-1] + slack:
        raise OutOfRange(
            f"targets [{target.min()}, {target.max()}] s leave the series span "
            f"[{source_t[0]}, {source_t[-1]}] s"
        )

    if target.size > 1:
        steps = np.diff(target)
        dt = float(steps.mean())
        if dt <= 0 or np.max(np.abs(steps - dt)) > UNIFORM_TOLERANCE * dt:
            raise ValueError("target timestamps must be uniformly spaced and increasing")
    else:
        dt = float(getattr(series, "dt", 1.0))

    if source_t.size == 1:
        values = np.full(target.size, source_v[0])
    else:
        values = np.interp(target, source_t, source_v)
    return SampledTrace(t0=float(target[0]), dt=dt, values=values, unit=series.unit)

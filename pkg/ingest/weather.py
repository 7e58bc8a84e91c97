"""Weather series (wind speed, temperature) that drive the polarization and thermal models.

CSV schema: header row, columns ``timestamp`` (ISO-8601), ``value`` and ``unit``
(``mph`` or ``degC``). Timestamps are normalized to UTC. Traces aligned against a
series count time in seconds from its first sample.
"""

from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator
from rich.console import Console
from rich.table import Table

from src.config import DATA_DIR
from src.errors import EmptySeries, ParseError
from src.estimation.resample import resample_linear
from src.model.trace import SampledTrace, Unit
from src.noise.params import RandomSeed, as_seed

console = Console()

WEATHER_DIR = DATA_DIR / "weather"
DEFAULT_COLUMNS = {"timestamp": "timestamp", "value": "value", "unit": "unit"}
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%S.%fZ"

UNIT_ALIASES = {
    "mph": Unit.MPH,
    "degc": Unit.CELSIUS,
    "°c": Unit.CELSIUS,
    "c": Unit.CELSIUS,
    "celsius": Unit.CELSIUS,
}

SYNTHETIC_DEFAULTS = {
    # mean, diurnal amplitude, noise std
    "wind": (11.0, 9.0, 0.5, Unit.MPH),
    "temperature": (10.0, 6.0, 0.2, Unit.CELSIUS),
}


class EnvironmentSeries(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    timestamps: pd.DatetimeIndex = Field(description="UTC, strictly increasing")
    values: np.ndarray
    unit: Unit
    source: str = ""
    skipped_rows: int = Field(default=0, description="Rows dropped for unparsable fields")

    @model_validator(mode="after")
    def _check(self):
        if len(self.timestamps) != len(self.values):
            raise ValueError("timestamps and values differ in length")
        if len(self.values) == 0:
            raise EmptySeries("an environment series needs at least one sample")
        if not self.timestamps.is_monotonic_increasing or not self.timestamps.is_unique:
            raise ValueError("timestamps must be strictly increasing")
        return self

    def __len__(self) -> int:
        return len(self.values)

    @property
    def start(self) -> pd.Timestamp:
        return self.timestamps[0]

    @property
    def seconds(self) -> np.ndarray:
        """Seconds since the first sample."""
        return (self.timestamps - self.timestamps[0]).total_seconds().to_numpy()

    @property
    def span(self) -> float:
        return float(self.seconds[-1])

    def to_trace(self, dt: float) -> SampledTrace:
        """Uniform trace on [0, span] at the given step."""
        n = int(np.floor(self.span / dt + 1e-9)) + 1
        return resample_linear(self, dt * np.arange(n))


def _parse_unit(raw: str) -> Unit:
    try:
        return UNIT_ALIASES[str(raw).strip().lower()]
    except KeyError:
        raise ParseError(f"unknown unit {raw!r}") from None


def parse_weather_csv(
    path: str | Path,
    columns: dict[str, str] | None = None,
    unit: Unit | str | None = None,
    source: str | None = None,
) -> EnvironmentSeries:
    """Read one weather series; duplicate timestamps are averaged, bad rows skipped."""
    path = Path(path)
    columns = {**DEFAULT_COLUMNS, **(columns or {})}
    if not path.exists():
        raise ParseError(f"weather file not found: {path}")
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc

    missing = [columns[c] for c in ("timestamp", "value") if columns[c] not in frame.columns]
    if missing:
        raise ParseError(f"{path}: missing column(s) {missing}")

    if unit is None:
        if columns["unit"] not in frame.columns:
            raise ParseError(f"{path}: no unit column and no unit given")
        units = {_parse_unit(u) for u in frame[columns["unit"]].dropna().unique()}
        if len(units) != 1:
            raise ParseError(f"{path}: expected one unit, found {sorted(units) or 'none'}")
        (unit,) = units
    unit = unit if isinstance(unit, Unit) else _parse_unit(unit)

    timestamps = pd.to_datetime(frame[columns["timestamp"]], utc=True, errors="coerce", format="ISO8601")
    values = pd.to_numeric(frame[columns["value"]], errors="coerce")
    valid = timestamps.notna() & values.notna() & np.isfinite(values)
    skipped = int((~valid).sum())
    if skipped:
        console.log(f"[yellow]SKIP[/] {skipped} unparsable row(s) in {path.name}")

    clean = pd.DataFrame({"timestamp": timestamps[valid], "value": values[valid].astype(float)})
    if clean.empty:
        raise EmptySeries(f"{path}: no usable rows")
    collapsed = clean.groupby("timestamp", sort=True)["value"].mean()
    return EnvironmentSeries(
        timestamps=pd.DatetimeIndex(collapsed.index),
        values=collapsed.to_numpy(),
        unit=unit,
        source=source or path.stem,
        skipped_rows=skipped,
    )


def write_weather_csv(series: EnvironmentSeries, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        {
            "timestamp": series.timestamps.strftime(TIMESTAMP_FORMAT),
            "value": series.values,
            "unit": str(series.unit),
        }
    )
    frame.to_csv(path, index=False)
    return path


def align_to(series: EnvironmentSeries, trace: SampledTrace) -> SampledTrace:
    """Series values at the trace's timestamps (seconds since the series start)."""
    return resample_linear(series, trace.timestamps)


def synthetic_weather(
    kind: str,
    start: datetime | str = "2023-06-01T00:00:00Z",
    duration: float = 86400.0,
    cadence: float = 600.0,
    seed: RandomSeed | int = 0,
    mean: float | None = None,
    amplitude: float | None = None,
    noise: float | None = None,
    period: float = 86400.0,
) -> EnvironmentSeries:
    """Diurnal sinusoid plus Gaussian noise, lowest at the start of the period."""
    if kind not in SYNTHETIC_DEFAULTS:
        raise ValueError(f"kind must be one of {sorted(SYNTHETIC_DEFAULTS)}, got {kind!r}")
    default_mean, default_amplitude, default_noise, unit = SYNTHETIC_DEFAULTS[kind]
    mean = default_mean if mean is None else mean
    amplitude = default_amplitude if amplitude is None else amplitude
    noise = default_noise if noise is None else noise

    n = int(np.floor(duration / cadence + 1e-9)) + 1
    seconds = cadence * np.arange(n)
    rng = as_seed(seed).child("weather", kind).generator()
    values = mean - amplitude * np.cos(2.0 * np.pi * seconds / period)
    if noise > 0:
        values = values + rng.normal(0.0, noise, n)
    if unit == Unit.MPH:
        values = np.clip(values, 0.0, None)

    start = pd.Timestamp(start)
    start = start.tz_localize(timezone.utc) if start.tzinfo is None else start.tz_convert(timezone.utc)
    timestamps = start + pd.to_timedelta(seconds, unit="s")
    return EnvironmentSeries(timestamps=pd.DatetimeIndex(timestamps), values=values, unit=unit, source=f"synthetic-{kind}")


def main():
    console.print("\n[bold magenta]══ Synthetic weather examples ══[/]\n")
    WEATHER_DIR.mkdir(parents=True, exist_ok=True)

    outputs = {
        # hourly, noise-free diurnal references
        "wind_example.csv": synthetic_weather("wind", cadence=3600.0, noise=0.0),
        "temperature_example.csv": synthetic_weather("temperature", cadence=3600.0, noise=0.0),
    }

    table = Table(title="Example weather files")
    table.add_column("File", style="cyan")
    table.add_column("Unit", style="yellow")
    table.add_column("Samples", justify="right")
    table.add_column("Min", justify="right")
    table.add_column("Max", justify="right")

    for name, series in outputs.items():
        path = write_weather_csv(series, WEATHER_DIR / name)
        table.add_row(path.name, str(series.unit), str(len(series)), f"{series.values.min():.2f}", f"{series.values.max():.2f}")

    console.print(table)
    console.print(f"\n[bold green]Saved {len(outputs)} files → {WEATHER_DIR}[/]")


if __name__ == "__main__":
    main()

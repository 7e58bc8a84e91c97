import numpy as np
import pandas as pd
import pytest

from ingest.weather import align_to, parse_weather_csv, synthetic_weather, write_weather_csv
from src.errors import EmptySeries, OutOfRange, ParseError
from src.model.trace import SampledTrace, Unit


def _write(tmp_path, text: str, name: str = "weather.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


# ── parsing ───────────────────────────────────────────────────────────────────


def test_example_wind_file(weather_dir):
    series = parse_weather_csv(weather_dir / "wind_example.csv")
    assert series.unit == Unit.MPH
    assert series.source == "wind_example"
    assert len(series) == 25
    assert series.span == 86400.0
    assert np.all(series.values >= 0)


def test_example_temperature_file(weather_dir):
    series = parse_weather_csv(weather_dir / "temperature_example.csv")
    assert series.unit == Unit.CELSIUS
    assert str(series.start.tz) == "UTC"


def test_unparsable_rows_are_skipped(tmp_path):
    path = _write(
        tmp_path,
        "timestamp,value,unit\n"
        "2023-06-01T00:00:00Z,4.0,mph\n"
        "2023-06-01T00:10:00Z,gusty,mph\n"
        "not-a-time,5.0,mph\n"
        "2023-06-01T00:20:00Z,6.0,mph\n",
    )
    series = parse_weather_csv(path)
    assert series.skipped_rows == 2
    assert np.allclose(series.values, [4.0, 6.0])
    assert np.allclose(series.seconds, [0.0, 1200.0])


def test_duplicate_timestamps_are_averaged(tmp_path):
    path = _write(
        tmp_path,
        "timestamp,value,unit\n"
        "2023-06-01T00:10:00Z,3.0,degC\n"
        "2023-06-01T00:00:00Z,1.0,degC\n"
        "2023-06-01T00:00:00Z,2.0,degC\n",
    )
    series = parse_weather_csv(path)
    assert np.allclose(series.values, [1.5, 3.0])
    assert series.timestamps.is_monotonic_increasing


def test_offsets_are_normalized_to_utc(tmp_path):
    path = _write(tmp_path, "timestamp,value,unit\n2023-06-01T02:00:00+02:00,1.0,mph\n")
    series = parse_weather_csv(path)
    assert series.start == pd.Timestamp("2023-06-01T00:00:00Z")


def test_unit_can_be_given_for_files_without_one(tmp_path):
    path = _write(tmp_path, "time,speed\n2023-06-01T00:00:00Z,7.0\n")
    series = parse_weather_csv(path, columns={"timestamp": "time", "value": "speed"}, unit="mph")
    assert series.unit == Unit.MPH
    with pytest.raises(ParseError):
        parse_weather_csv(path, columns={"timestamp": "time", "value": "speed"})


def test_unknown_unit(tmp_path):
    path = _write(tmp_path, "timestamp,value,unit\n2023-06-01T00:00:00Z,7.0,knots\n")
    with pytest.raises(ParseError):
        parse_weather_csv(path)


def test_missing_column(tmp_path):
    path = _write(tmp_path, "timestamp,unit\n2023-06-01T00:00:00Z,mph\n")
    with pytest.raises(ParseError):
        parse_weather_csv(path)


def test_missing_file(tmp_path):
    with pytest.raises(ParseError):
        parse_weather_csv(tmp_path / "absent.csv")


def test_no_usable_rows(tmp_path):
    path = _write(tmp_path, "timestamp,value,unit\nyesterday,calm,mph\n")
    with pytest.raises(EmptySeries):
        parse_weather_csv(path)


# ── writing and synthesis ─────────────────────────────────────────────────────


def test_written_series_reads_back(tmp_path):
    series = synthetic_weather("temperature", duration=7200.0, cadence=600.0, seed=3)
    back = parse_weather_csv(write_weather_csv(series, tmp_path / "out" / "t.csv"))
    assert back.unit == series.unit
    assert back.start == series.start
    assert np.allclose(back.seconds, series.seconds)
    assert np.allclose(back.values, series.values)


def test_synthetic_wind_is_calm_at_the_start_of_the_day():
    series = synthetic_weather("wind", noise=0.0)
    assert len(series) == 145
    assert series.values[0] == pytest.approx(2.0)
    assert series.values.max() == pytest.approx(20.0)


def test_synthetic_weather_is_seeded():
    first = synthetic_weather("wind", seed=4)
    assert np.array_equal(first.values, synthetic_weather("wind", seed=4).values)
    assert not np.array_equal(first.values, synthetic_weather("wind", seed=5).values)


def test_unknown_synthetic_kind():
    with pytest.raises(ValueError):
        synthetic_weather("humidity")


# ── alignment ─────────────────────────────────────────────────────────────────


def test_series_to_uniform_trace():
    series = synthetic_weather("temperature", duration=3600.0, cadence=1800.0, noise=0.0)
    trace = series.to_trace(600.0)
    assert len(trace) == 7
    assert trace.unit == Unit.CELSIUS
    assert trace.values[0] == series.values[0]
    assert trace.values[3] == pytest.approx(series.values[1])


def test_align_to_trace():
    series = synthetic_weather("wind", duration=600.0, cadence=60.0, noise=0.0)
    target = SampledTrace(t0=30.0, dt=60.0, values=np.zeros(5), unit=Unit.RADIANS)
    aligned = align_to(series, target)
    assert aligned.unit == Unit.MPH
    assert np.allclose(aligned.values, 0.5 * (series.values[:5] + series.values[1:6]), rtol=1e-3)


def test_align_beyond_the_series():
    series = synthetic_weather("wind", duration=600.0, cadence=60.0)
    with pytest.raises(OutOfRange):
        align_to(series, SampledTrace(dt=60.0, values=np.zeros(20), unit=Unit.RADIANS))

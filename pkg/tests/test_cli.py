import math

import pandas as pd
import pytest
import yaml

from src.cli.report import REPORT_NAME, emit_report, format_record, parse_report, write_plot_data
from src.cli.scenario import Pipeline, load_scenario
from src.errors import ConfigError
from src.main import EXIT_CONFIG, EXIT_IO, EXIT_OK, execute, run

# ── report format ─────────────────────────────────────────────────────────────


def test_record_line():
    line = format_record({"record": "delay.round_trip", "slope": 3.616e-9, "n_points": 1441, "ok": True})
    assert line == "record=delay.round_trip slope=3.616e-09 n_points=1441 ok=true"


def test_report_reads_back(tmp_path):
    records = [
        {"record": "session", "kind": "SessionReport", "ber_mean": 0.0231, "n_words": 31},
        {"record": "phase.span", "correlation": math.nan, "note": "two words"},
    ]
    back = parse_report(emit_report(records, tmp_path / "nested" / REPORT_NAME))
    assert back[0] == records[0]
    assert math.isnan(back[1]["correlation"])
    assert back[1]["note"] == "two words"


def test_empty_report_is_refused(tmp_path):
    with pytest.raises(ValueError):
        emit_report([], tmp_path / REPORT_NAME)


def test_plot_data_files(tmp_path):
    written = write_plot_data({"b": pd.DataFrame({"x": [1.0]}), "a": pd.DataFrame({"y": [2.0]})}, tmp_path)
    assert [p.name for p in written] == ["a.csv", "b.csv"]
    assert (tmp_path / "a.csv").read_text() == "y\n2.000000000e+00\n"


# ── scenarios ─────────────────────────────────────────────────────────────────


def test_overrides_win_over_the_file(tmp_path):
    path = tmp_path / "scenario.yaml"
    path.write_text(yaml.safe_dump({"seed": 3, "duration": 10.0}))
    scenario = load_scenario(path, pipeline="characterize-delay", seed=9, duration=None)
    assert scenario.pipeline == Pipeline.CHARACTERIZE_DELAY
    assert scenario.seed == 9
    assert scenario.run_duration == 10.0


def test_invalid_scenario(tmp_path):
    with pytest.raises(ConfigError):
        load_scenario(None, pipeline="characterize-delay", psd_segment=1)


def test_delay_reports_are_byte_identical(tmp_path):
    first = load_scenario(None, pipeline="characterize-delay", duration=3600.0, output_dir=tmp_path / "one")
    second = first.model_copy(update={"output_dir": tmp_path / "two"})
    execute(first)
    execute(second)
    assert (tmp_path / "one" / REPORT_NAME).read_bytes() == (tmp_path / "two" / REPORT_NAME).read_bytes()


# ── command line ──────────────────────────────────────────────────────────────


def test_characterize_delay_command(tmp_path):
    code = run(["characterize-delay", "--duration", "3600", "--seed", "2", "--out", str(tmp_path)])
    assert code == EXIT_OK
    records = {r["record"]: r for r in parse_report(tmp_path / REPORT_NAME)}
    assert set(records) == {"delay.nominal", "delay.differential", "delay.round_trip"}
    assert records["delay.round_trip"]["slope"] == pytest.approx(8.5e-6 * 425.45e-6, rel=1e-6)
    assert records["delay.nominal"]["tau_differential"] == pytest.approx(108.4e-9, rel=1e-9)
    assert (tmp_path / "delay_vs_temperature.csv").exists()


def test_missing_wind_file_is_a_config_error(tmp_path):
    config = tmp_path / "scenario.yaml"
    config.write_text(yaml.safe_dump({"wind": str(tmp_path / "absent.csv")}))
    code = run(["characterize-polarization", "--config", str(config), "--out", str(tmp_path)])
    assert code == EXIT_CONFIG
    assert not (tmp_path / REPORT_NAME).exists()


def test_missing_scenario_file(tmp_path):
    assert run(["characterize-phase", "--config", str(tmp_path / "absent.yaml")]) == EXIT_CONFIG


def test_repeat_writes_one_directory_per_seed(tmp_path):
    code = run(["characterize-delay", "--duration", "3600", "--repeat", "2", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert (tmp_path / "seed-0" / REPORT_NAME).exists()
    assert (tmp_path / "seed-1" / REPORT_NAME).exists()


def test_report_command(tmp_path):
    path = emit_report([{"record": "session", "ber_mean": 0.02}], tmp_path / REPORT_NAME)
    assert run(["report", str(path)]) == EXIT_OK
    assert run(["report", str(tmp_path / "absent.txt")]) == EXIT_IO

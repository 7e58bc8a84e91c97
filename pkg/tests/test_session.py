import math

import numpy as np
import pytest

from src.errors import DesyncError, LockLost, OutOfRange
from src.model.fiber import Band, total_loss
from src.model.trace import SampledTrace, Unit
from src.noise.polarization import free_drift_budget
from src.protocol.codebook import Meaning
from src.protocol.session import Session, WordStatus, arm_drift_params, run_session
from src.protocol.settings import SessionConfig, load_session_config
from src.protocol.tdi import tdi_lock

# TDI 0–1, PolRef 1–11, data 11–21, TDI 21–22, data 22–32, TDI 32–33
SHORT_SESSION = 33.0


@pytest.fixture
def ideal_result(ideal_config, three_node):
    return Session(ideal_config, three_node, SHORT_SESSION, seed=1).run()


def test_ideal_link_has_no_bit_errors(ideal_result):
    report = ideal_result.report
    assert report.ber_mean < 0.001
    assert report.n_detected > 1000
    assert report.decode_failures == 0


def test_sequence_of_blocks(ideal_result):
    report = ideal_result.report
    assert report.n_words == 6
    assert report.n_tdi_locks == 3
    assert report.n_polarization_corrections == 1
    assert report.n_pulses_sent == report.n_measured == 400_000
    assert list(ideal_result.events["event"][:3]) == ["tdi-lock", "polarization-correct", "measure"]
    assert list(ideal_result.blocks["held"]) == [False, False]
    assert report.n_held == 0
    assert (ideal_result.words["status"] == WordStatus.CLEAN).all()


def test_detector_mean_photon_number(ideal_result, ideal_config):
    assert ideal_result.report.mean_photon_number == pytest.approx(ideal_config.mean_photon_number, rel=0.05)


def test_ideal_jitter_is_zero(ideal_result):
    assert ideal_result.report.timing_jitter_std == 0.0
    assert ideal_result.report.bin_assignment_errors == 0


def test_sessions_are_reproducible(three_node):
    config = SessionConfig()
    first = run_session(config, three_node, 12.0, seed=5)
    second = run_session(config, three_node, 12.0, seed=5)
    assert first == second


def test_extra_loss_costs_detections_not_errors(ideal_config, three_node):
    reference = total_loss(three_node, Band.NM1350)
    base = ideal_config.model_copy(update={"reference_loss_db": reference})
    lossy = base.model_copy(update={"conversion_loss_db": 10.0 * math.log10(2.0)})
    clean = Session(base, three_node, SHORT_SESSION, seed=2).run().report
    halved = Session(lossy, three_node, SHORT_SESSION, seed=2).run().report
    assert halved.n_detected / clean.n_detected == pytest.approx(0.5, rel=0.05)
    assert halved.ber_mean < 0.001


def test_lost_clock_desynchronizes(three_node):
    config = SessionConfig(clock_drop_every=1)
    with pytest.raises(DesyncError):
        Session(config, three_node, 5.0).run()


def test_every_tenth_clock_pulse_lost(ideal_config, three_node, ideal_result):
    config = ideal_config.model_copy(update={"clock_drop_every": 10})
    result = Session(config, three_node, SHORT_SESSION, seed=1).run()
    words = result.words
    # pulse 10 is a DATA pulse, pulse 20 the trigger of the last TDI word
    assert result.report.misdecoded_words == 0
    assert result.report.repaired_words == 1
    assert result.report.decode_failures == 1
    assert set(words["status"]) == {WordStatus.CLEAN, WordStatus.REPAIRED, WordStatus.ERASED}
    decoded = words[words["status"] != WordStatus.ERASED]
    assert (decoded["decoded"] == decoded["sent"]).all()
    assert list(words["timestamp"]) == list(ideal_result.words["timestamp"])
    assert list(words["sent"]) == list(ideal_result.words["sent"])
    data_words = words.loc[words["decoded"] == Meaning.DATA_TRANSMISSION, "timestamp"]
    measured = result.events.loc[result.events["event"] == "measure", "timestamp"]
    assert list(measured) == list(data_words) == [11.0, 22.0]


def test_lost_lock_holds_the_next_data_window(ideal_config, three_node, ideal_result, monkeypatch):
    calls = []

    def lock_failing_second(tdi, **kwargs):
        calls.append(tdi)
        if len(calls) == 2:
            raise LockLost("reference power left the capture range")
        return tdi_lock(tdi, **kwargs)

    monkeypatch.setattr("src.protocol.session.tdi_lock", lock_failing_second)
    result = Session(ideal_config, three_node, SHORT_SESSION, seed=1).run()

    locks = result.events[result.events["event"] == "tdi-lock"].set_index("timestamp")["outcome"]
    assert locks[21.0].startswith("lost")
    assert not locks[32.0].startswith("lost")
    assert list(result.events.loc[result.events["event"] == "hold", "timestamp"]) == [22.0]

    blocks = result.blocks
    assert list(blocks["held"]) == [False, True]
    assert blocks["setpoint"].iloc[1] == blocks["setpoint"].iloc[0]

    report = result.report
    assert report.n_pulses_sent == 400_000
    assert report.n_measured == report.n_held == 200_000
    assert np.array_equal(result.sent, ideal_result.sent[:200_000])
    assert np.array_equal(result.outcomes, ideal_result.outcomes[:200_000])
    assert report.n_detected == ideal_result.blocks["detected"].iloc[0]
    assert report.ber_mean < 0.001


def test_wind_trace_drives_the_waveplates(ideal_config, three_node):
    t = np.arange(SHORT_SESSION + 1)
    calm = SampledTrace(dt=1.0, values=np.zeros(t.size), unit=Unit.MPH)
    # windy through the PolRef window, calm from the first data window on
    gusty = SampledTrace(dt=1.0, values=np.where(t < 12, 15.0, 0.0), unit=Unit.MPH)
    still = Session(ideal_config, three_node, SHORT_SESSION, seed=3, wind=calm).run().report
    windy = Session(ideal_config, three_node, SHORT_SESSION, seed=3, wind=gusty).run().report
    assert still.n_waveplate_moves == 0
    assert windy.n_waveplate_moves > 10
    assert windy.waveplate_rotation > still.waveplate_rotation == 0.0
    assert windy.mean_polarization_error > still.mean_polarization_error == 0.0
    assert windy.n_polarization_corrections == still.n_polarization_corrections == 1


def test_run_session_takes_a_wind_trace(ideal_config, three_node):
    windy = SampledTrace(dt=1.0, values=np.full(13, 15.0), unit=Unit.MPH)
    report = run_session(ideal_config, three_node, 12.0, seed=4, wind=windy)
    assert report.n_waveplate_moves > 0
    with pytest.raises(OutOfRange):
        run_session(ideal_config, three_node, 20.0, seed=4, wind=windy)


def test_default_cadence_fits_the_drift_budget(three_node):
    config = SessionConfig()
    budget = free_drift_budget(
        arm_drift_params(three_node),
        config.wind_mph,
        math.radians(config.polarization_tolerance_deg),
        config.polarization_sample_period,
    )
    assert config.free_drift == 50.0
    assert config.free_drift < budget


def test_report_record(ideal_result):
    (record,) = ideal_result.report.to_records()
    assert record["record"] == "session"
    assert record["kind"] == "SessionReport"
    assert record["duration"] == SHORT_SESSION


def test_three_node_drift_law(three_node):
    params = arm_drift_params(three_node)
    kappas = [span.pol_params.kappa for span in three_node.measured_arm.spans]
    assert params.kappa == pytest.approx(math.hypot(*kappas))


def test_session_config_file():
    config = load_session_config()
    assert config.lock.kp == 0.3
    assert config.lock.dwell_steps == 200
    assert load_session_config(visibility=0.9).visibility == 0.9


def test_polarization_reference_must_fit_its_period():
    with pytest.raises(ValueError):
        SessionConfig(polarization_reference=60.0, polarization_period=60.0)


def test_waveplate_loop_runs_inside_an_analyser_sample():
    assert load_session_config().polarization_loop_period == 0.1
    with pytest.raises(ValueError):
        SessionConfig(polarization_loop_period=2.0)


@pytest.mark.slow
def test_calibrated_session_ber(three_node):
    report = run_session(SessionConfig(), three_node, 336.0, seed=7)
    assert 0.017 <= report.ber_mean <= 0.029

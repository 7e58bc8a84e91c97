import numpy as np
import pytest

from src.config import ROOT_DIR, default_calibration
from src.model.fiber import Band, ChannelPath, ConfigurationKind, SpanId, compose_configuration
from src.model.trace import SampledTrace, Unit
from src.protocol.settings import SessionConfig


@pytest.fixture(scope="session")
def calibration():
    return default_calibration()


@pytest.fixture(scope="session")
def spans(calibration):
    return calibration.spans


@pytest.fixture(scope="session")
def three_node(calibration):
    chosen = calibration.select([SpanId.A, SpanId.C, SpanId.D])
    return ChannelPath(config=compose_configuration(chosen, ConfigurationKind.THREE_NODE), wavelength=Band.NM1350)


@pytest.fixture
def ideal_config():
    return SessionConfig(visibility=1.0, timing_jitter=0.0, tdi_drift_rate=0.0, wind_mph=0.0)


@pytest.fixture(scope="session")
def weather_dir():
    return ROOT_DIR / "data" / "weather"


@pytest.fixture
def constant_wind():
    def make(mph: float, n: int, dt: float = 1.0) -> SampledTrace:
        return SampledTrace(dt=dt, values=np.full(n, mph), unit=Unit.MPH)

    return make

from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.config import SESSION_PATH, load_yaml
from src.errors import ConfigError
from src.protocol.qubit import BIN_SPACING, PULSE_FWHM
from src.protocol.tdi import LockSettings


class SessionConfig(BaseModel):
    """Everything the Tx and Rx sequencers agree on before a session."""

    model_config = ConfigDict(frozen=True)

    # ── sequence timings (s) ──
    tdi_reference: float = Field(default=1.0, gt=0)
    data_window: float = Field(default=10.0, gt=0)
    polarization_reference: float = Field(default=10.0, gt=0)
    polarization_period: float = Field(
        default=60.0, gt=0, description="Start-to-start spacing of PolRef windows; free drift must fit the drift budget"
    )

    # ── clock channel ──
    codebook_size: int = Field(default=4, ge=4, description="At least one word per meaning")
    word_length: int = Field(default=8, ge=2)
    clock_pulse_loss: float = Field(default=0.0, ge=0, le=1, description="Independent loss probability per pulse")
    clock_drop_every: int = Field(default=0, ge=0, description="Drop every N-th clock pulse; 0 disables")
    max_decode_failure_fraction: float = Field(default=0.5, ge=0, le=1)

    # ── qubits ──
    qubit_rate: float = Field(default=20e3, gt=0)
    bin_spacing: float = Field(default=BIN_SPACING, gt=0)
    pulse_fwhm: float = Field(default=PULSE_FWHM, gt=0)
    random_bits: bool = False
    mean_photon_number: float = Field(default=0.0202, ge=0, description="⟨n̂⟩ at the detector")
    reference_loss_db: float | None = Field(
        default=None, description="Loss at which ⟨n̂⟩ is quoted; defaults to the full channel loss"
    )
    timing_jitter: float = Field(default=520e-12, ge=0)

    # ── receiver ──
    visibility: float = Field(default=0.954, ge=0, le=1)
    visibility_ramp: float = Field(default=0.0, ge=0, description="Visibility lost per second")
    conversion_loss_db: float = Field(default=0.0, ge=0)
    conversion_visibility: float = Field(default=1.0, ge=0, le=1)

    # ── TDI ──
    tdi_drift_rate: float = Field(default=0.5e-9, description="Arm drift between locks (m/s)")
    lock: LockSettings = LockSettings()

    # ── polarization ──
    polarization_gain: float = Field(default=1.0, gt=0)
    polarization_tolerance_deg: float = Field(default=20.0, gt=0)
    polarization_sample_period: float = Field(default=1.0, gt=0, description="Analyser sample period (s)")
    polarization_loop_period: float = Field(default=0.1, gt=0, description="Waveplate loop period inside PolRef (s)")
    waveplate_resolution_deg: float = Field(default=0.5, ge=0, description="Smallest error the waveplates act on")
    wind_mph: float = Field(default=5.0, ge=0)

    @model_validator(mode="after")
    def _sequence_fits(self):
        if self.polarization_reference >= self.polarization_period:
            raise ValueError("polarization reference windows must be shorter than their period")
        if self.polarization_loop_period > self.polarization_sample_period:
            raise ValueError("the waveplate loop cannot run slower than the analyser samples")
        return self

    @property
    def free_drift(self) -> float:
        """Seconds the fiber drifts uncorrected between PolRef windows."""
        return self.polarization_period - self.polarization_reference


def load_session_config(path: str | Path | None = None, **overrides) -> SessionConfig:
    data = load_yaml(path or SESSION_PATH)
    data = {**data.get("session", data), **overrides}
    try:
        return SessionConfig(**data)
    except ValidationError as exc:
        raise ConfigError(f"invalid session configuration: {exc}") from exc

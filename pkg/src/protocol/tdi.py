"""
╔══════════════════════════════════════════════════════════════╗
║  TIME-DELAY INTERFEROMETER — measurement and quadrature lock ║
║                                                              ║
║    early ─┬─ short arm ─┐                                    ║
║           └─ long arm  ─┴─► port0 / port1                    ║
║                                                              ║
║  Delay = bin spacing, so the middle slot interferes the      ║
║  early bin (long arm) with the late bin (short arm).         ║
╚══════════════════════════════════════════════════════════════╝
"""

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import DelayMismatch, LockLost
from src.noise.channel import transmission
from src.noise.params import RandomSeed, as_seed
from src.protocol.qubit import BIN_SPACING, TimeBinQubit

QUBIT_WAVELENGTH = 1350e-9
DELAY_TOLERANCE = 1e-12
LOCK_TOLERANCE = 1e-2

# slot order of every count array
EARLY, PORT0, PORT1, LATE = range(4)


class LockSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    kp: float = Field(default=0.3, ge=0)
    ki: float = Field(default=0.01, ge=0)
    rate: float = Field(default=1e3, gt=0, description="Lock update rate (Hz)")
    lost_threshold: float = Field(
        default=0.5, gt=0, description="Error, as a fraction of the half-fringe amplitude, that counts as lost"
    )
    dwell_steps: int = Field(default=200, ge=1)


class TDIState(BaseModel):
    """Interferometer state.

    ``path_imbalance`` is the piezo setpoint written by the lock; ``drift`` is the
    environmental change of the arm difference. The interferometer phase uses
    their sum. The reference light is shifted by ``aom_offset`` relative to the
    qubits, so a reference at quadrature puts the qubits at a fringe maximum.
    """

    model_config = ConfigDict(frozen=True)

    path_imbalance: float = Field(default=0.0, description="Piezo setpoint (m)")
    drift: float = Field(default=0.0, description="Environmental arm drift (m)")
    fsr: float = Field(default=1.0 / BIN_SPACING, gt=0, description="Free spectral range (Hz)")
    lock_integrator: float = 0.0
    visibility: float = Field(default=1.0, ge=0, le=1)
    wavelength: float = Field(default=QUBIT_WAVELENGTH, gt=0)
    aom_offset: float = Field(default=None, description="Reference-minus-qubit frequency (Hz)")
    lost_steps: int = 0

    @model_validator(mode="before")
    @classmethod
    def _quarter_fsr(cls, data):
        if isinstance(data, dict) and data.get("aom_offset") is None:
            fsr = data.get("fsr", 1.0 / BIN_SPACING)
            data = {**data, "aom_offset": fsr / 4.0}
        return data

    @property
    def delay(self) -> float:
        return 1.0 / self.fsr

    @property
    def phase(self) -> float:
        """Interferometer phase seen by the qubits, in [0, 2π)."""
        return (2.0 * math.pi * (self.path_imbalance + self.drift) / self.wavelength) % (2.0 * math.pi)

    @property
    def reference_phase(self) -> float:
        return self.phase + 2.0 * math.pi * self.aom_offset * self.delay


def reference_power(tdi: TDIState) -> float:
    """Normalized fringe of the reference light on the monitored port."""
    return 0.5 * (1.0 + tdi.visibility * math.cos(tdi.reference_phase))


def lock_error(reference: float, tdi: TDIState) -> float:
    """Distance from quadrature in units of the half-fringe amplitude."""
    if tdi.visibility == 0:
        return 0.0
    return (reference - 0.5) / (tdi.visibility / 2.0)


def tdi_lock_step(reference: float, tdi: TDIState, settings: LockSettings = LockSettings()) -> TDIState:
    """One PI update of the piezo setpoint towards reference quadrature."""
    error = lock_error(reference, tdi)
    integrator = tdi.lock_integrator + error
    correction = settings.kp * error + settings.ki * integrator
    lost_steps = tdi.lost_steps + 1 if abs(error) > settings.lost_threshold else 0
    if lost_steps >= settings.dwell_steps:
        raise LockLost(f"lock error above {settings.lost_threshold} for {lost_steps} steps")
    return tdi.model_copy(
        update={
            "path_imbalance": tdi.path_imbalance + tdi.wavelength / (2.0 * math.pi) * correction,
            "lock_integrator": integrator,
            "lost_steps": lost_steps,
        }
    )


class LockResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    state: TDIState
    n_steps: int
    converged: bool
    converged_step: int | None = None
    final_error: float
    errors: np.ndarray


def tdi_lock(
    tdi: TDIState,
    window: float = 1.0,
    settings: LockSettings = LockSettings(),
    drift_rate: float = 0.0,
    reference_noise: float = 0.0,
    seed: RandomSeed | int = 0,
) -> LockResult:
    """Run the lock over a reference window while the arm keeps drifting (m/s)."""
    n_steps = max(1, int(round(window * settings.rate)))
    dt = 1.0 / settings.rate
    rng = as_seed(seed).child("protocol", "tdi-lock").generator()
    noise = rng.normal(0.0, reference_noise, n_steps) if reference_noise > 0 else np.zeros(n_steps)

    errors = np.empty(n_steps)
    converged_step = None
    state = tdi.model_copy(update={"lost_steps": 0})
    for k in range(n_steps):
        reference = reference_power(state) + noise[k]
        errors[k] = lock_error(reference, state)
        state = tdi_lock_step(reference, state, settings)
        state = drift_tdi(state, dt, drift_rate)
        if abs(errors[k]) < LOCK_TOLERANCE:
            converged_step = k if converged_step is None else converged_step
        else:
            converged_step = None

    final_error = lock_error(reference_power(state), state)
    return LockResult(
        state=state,
        n_steps=n_steps,
        converged=abs(final_error) < LOCK_TOLERANCE,
        converged_step=converged_step,
        final_error=final_error,
        errors=errors,
    )


def drift_tdi(tdi: TDIState, elapsed: float, drift_rate: float) -> TDIState:
    """Environmental drift only; the piezo setpoint is held."""
    if drift_rate == 0 or elapsed == 0:
        return tdi
    return tdi.model_copy(update={"drift": tdi.drift + drift_rate * elapsed})


def fringe_phase_error(tdi: TDIState) -> float:
    """Qubit phase error as a fraction of one fringe period."""
    wrapped = (tdi.phase + math.pi) % (2.0 * math.pi) - math.pi
    return abs(wrapped) / (2.0 * math.pi)


# ══════════════════════════════════════════════════════════════════════════════
# MEASUREMENT
# ══════════════════════════════════════════════════════════════════════════════


class TDICounts(BaseModel):
    model_config = ConfigDict(frozen=True)

    early: int = 0
    port0: int = 0
    port1: int = 0
    late: int = 0
    trials: int = 0
    detected_trials: int = 0
    discarded_trials: int = Field(default=0, description="Both middle ports clicked")

    @property
    def middle(self) -> int:
        return self.port0 + self.port1


def slot_probabilities(amp_early: float, amp_late: float, relative_phase, tdi_phase, visibility) -> np.ndarray:
    """Per-photon probabilities of (early, port0, port1, late); rows sum to 1.

    Phases and visibility broadcast, giving one row per qubit.
    """
    fringe = np.asarray(visibility) * 2.0 * amp_early * amp_late * np.cos(
        np.asarray(relative_phase) - np.asarray(tdi_phase)
    )
    fringe = np.clip(np.atleast_1d(fringe), -1.0, 1.0)
    probs = np.empty((fringe.size, 4))
    probs[:, EARLY] = amp_early**2 / 2.0
    probs[:, PORT0] = (1.0 + fringe) / 4.0
    probs[:, PORT1] = (1.0 - fringe) / 4.0
    probs[:, LATE] = amp_late**2 / 2.0
    return probs / probs.sum(axis=1, keepdims=True)


def _check_delay(qubit: TimeBinQubit, tdi: TDIState) -> None:
    if abs(tdi.delay - qubit.bin_spacing) > DELAY_TOLERANCE:
        raise DelayMismatch(
            f"TDI delay {tdi.delay * 1e9:.4f} ns does not match the {qubit.bin_spacing * 1e9:.4f} ns bin spacing"
        )


def detect_slots(
    photons: np.ndarray,
    probabilities: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Threshold clicks per slot for each trial, given its photon number."""
    photons = np.asarray(photons, dtype=np.int64)
    if probabilities.shape[0] == 1:
        probabilities = np.broadcast_to(probabilities, (photons.size, 4))
    slots = np.zeros((photons.size, 4), dtype=np.int64)
    hit = photons > 0
    if np.any(hit):
        slots[hit] = rng.multinomial(photons[hit], probabilities[hit])
    return slots > 0


def middle_outcomes(clicks: np.ndarray) -> np.ndarray:
    """0/1 for a single middle-port click, −1 when absent or ambiguous."""
    outcome = np.full(clicks.shape[0], -1, dtype=np.int8)
    outcome[clicks[:, PORT0] & ~clicks[:, PORT1]] = 0
    outcome[clicks[:, PORT1] & ~clicks[:, PORT0]] = 1
    return outcome


def tdi_measure(
    qubit: TimeBinQubit,
    tdi: TDIState,
    n_trials: int,
    mean_photon_number: float,
    seed: RandomSeed | int = 0,
    loss_db: float = 0.0,
) -> TDICounts:
    """Send n_trials copies of a coherent-state qubit through the TDI."""
    _check_delay(qubit, tdi)
    seed = as_seed(seed)
    rng = seed.child("protocol", "tdi-measure").generator()
    photons = rng.poisson(mean_photon_number * transmission(loss_db), n_trials)
    probabilities = slot_probabilities(
        qubit.amp_early, qubit.amp_late, qubit.relative_phase, tdi.phase, tdi.visibility
    )
    clicks = detect_slots(photons, probabilities, rng)
    discarded = clicks[:, PORT0] & clicks[:, PORT1]
    kept = clicks[~discarded]
    totals = kept.sum(axis=0)
    return TDICounts(
        early=int(totals[EARLY]),
        port0=int(totals[PORT0]),
        port1=int(totals[PORT1]),
        late=int(totals[LATE]),
        trials=n_trials,
        detected_trials=int(np.count_nonzero(kept.any(axis=1))),
        discarded_trials=int(np.count_nonzero(discarded)),
    )

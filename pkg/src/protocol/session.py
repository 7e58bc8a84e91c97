"""
╔══════════════════════════════════════════════════════════════╗
║  SESSION — Tx and Rx sequencers over the simulated link      ║
║                                                              ║
║  transmit → channel → decode ─┬─ tdi_lock ─────────┐         ║
║                               ├─ polarization ─────┤         ║
║                               ├─ measure ──────────┤         ║
║                               ├─ hold ─────────────┼─ advance║
║                               └─ idle ─────────────┘    │    ║
║                          transmit ◄─────────────────────┴END ║
╚══════════════════════════════════════════════════════════════╝
"""

import math
import operator
from enum import StrEnum
from typing import Annotated, TypedDict

import numpy as np
import pandas as pd
from langgraph.graph import END, START, StateGraph
from pydantic import BaseModel, ConfigDict, Field
from rich.console import Console

from src.errors import DesyncError, LockLost
from src.model.fiber import Band, ChannelPath, total_loss
from src.model.trace import SampledTrace
from src.noise.channel import transmission
from src.noise.params import PolarizationDriftParams, RandomSeed, as_seed
from src.noise.polarization import free_drift_budget
from src.protocol.ber import UNDETECTED, compute_ber
from src.protocol.codebook import Codebook, Meaning, build_codebook, decode_command
from src.protocol.polarization import PolarizationTracker, transmitted_fraction
from src.protocol.qubit import bin_assignment_errors, jitter_offsets
from src.protocol.settings import SessionConfig
from src.protocol.tdi import (TDIState, detect_slots, drift_tdi,
                              middle_outcomes, slot_probabilities, tdi_lock)
from src.protocol.transmitter import Transmitter

console = Console()

TIME_TOLERANCE = 1e-9

# ══════════════════════════════════════════════════════════════════════════════
# STATE
# ══════════════════════════════════════════════════════════════════════════════


class SessionState(TypedDict, total=False):
    t: float
    word_index: int
    clock_pulses: int
    previous: Meaning | None
    last_polarization: float | None
    command: dict
    received: tuple[int, ...] | None
    decoded: Meaning | None
    action: str
    tdi: TDIState
    tdi_locked: bool
    decode_failures: int
    qubits_sent: int
    n_tdi_locks: int
    n_polarization_corrections: int
    events: Annotated[list[dict], operator.add]
    words: Annotated[list[dict], operator.add]
    blocks: Annotated[list[dict], operator.add]


class WordStatus(StrEnum):
    CLEAN = "clean"
    REPAIRED = "repaired"
    ERASED = "erased"
    MISDECODED = "misdecoded"


class SessionReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_pulses_sent: int = Field(ge=0)
    n_detected: int = Field(ge=0)
    n_measured: int = Field(default=0, ge=0, description="Qubits sent while the Rx was gated on")
    n_held: int = Field(default=0, ge=0, description="Qubits sent while the TDI was unlocked, kept out of the BER")
    mean_photon_number: float = Field(description="−ln(1 − n_detected/n_measured)")
    ber_plus: float = Field(ge=0, le=1)
    ber_minus: float = Field(ge=0, le=1)
    ber_mean: float = Field(ge=0, le=1)
    ber_std_error: float = 0.0
    timing_jitter_std: float = 0.0
    decode_failures: int = 0
    repaired_words: int = 0
    misdecoded_words: int = 0
    n_words: int = 0
    n_tdi_locks: int = 0
    n_polarization_corrections: int = 0
    n_waveplate_moves: int = 0
    waveplate_rotation: float = Field(default=0.0, description="Total waveplate rotation commanded (rad)")
    mean_polarization_error: float = 0.0
    bin_assignment_errors: int = 0
    duration: float = 0.0

    def to_records(self, prefix: str = "session") -> list[dict]:
        return [{"record": prefix, "kind": type(self).__name__, **self.model_dump()}]


class SessionResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    report: SessionReport
    events: pd.DataFrame
    words: pd.DataFrame
    blocks: pd.DataFrame
    sent: np.ndarray
    outcomes: np.ndarray


def arm_drift_params(path: ChannelPath) -> PolarizationDriftParams:
    """Drift law of a chain of spans: diffusive, so the rate coefficients add in quadrature."""
    spans = path.measured_arm.spans
    kappa = math.sqrt(sum(span.pol_params.kappa**2 for span in spans))
    return PolarizationDriftParams(kappa=kappa, n_exponent=spans[0].pol_params.n_exponent)


# ══════════════════════════════════════════════════════════════════════════════
# SESSION
# ══════════════════════════════════════════════════════════════════════════════


class Session:
    """One run of the Tx and Rx sequencers.

    `wind` is a wind-speed trace on the session clock; without one the constant
    ``config.wind_mph`` drives the polarization drift.
    """

    def __init__(
        self,
        config: SessionConfig,
        channel: ChannelPath,
        duration: float,
        seed: RandomSeed | int = 0,
        codebook: Codebook | None = None,
        wind: SampledTrace | None = None,
    ):
        if duration <= 0:
            raise ValueError(f"session duration must be positive, got {duration}")
        self.config = config
        self.channel = channel
        self.duration = duration
        self.seed = as_seed(seed).child("session")
        self.codebook = codebook or build_codebook(config.codebook_size, config.word_length)
        self.transmitter = Transmitter(config, self.codebook)

        self.loss_db = total_loss(channel, Band.NM1350) + config.conversion_loss_db
        reference_loss = self.loss_db if config.reference_loss_db is None else config.reference_loss_db
        self.source_mean = config.mean_photon_number / transmission(reference_loss)

        drift = arm_drift_params(channel)
        tolerance = math.radians(config.polarization_tolerance_deg)
        self.tracker = PolarizationTracker(
            drift,
            config.wind_mph if wind is None else wind,
            duration,
            seed=self.seed,
            dt=config.polarization_sample_period,
            tolerance=tolerance,
            gain=config.polarization_gain,
            loop_period=config.polarization_loop_period,
            resolution=math.radians(config.waveplate_resolution_deg),
        )
        peak_wind = config.wind_mph if wind is None else float(np.max(wind.values))
        budget = free_drift_budget(drift, peak_wind, tolerance, config.polarization_sample_period)
        if config.free_drift > budget:
            console.log(
                f"[yellow]Polarization drifts {config.free_drift:.0f} s between references; "
                f"at {peak_wind:.1f} mph the rms error passes "
                f"{config.polarization_tolerance_deg:.0f}° after {budget:.1f} s[/yellow]"
            )
        self.graph = self._build_graph()

    # ── nodes ────────────────────────────────────────────────────────────────

    def _transmit(self, state: SessionState) -> dict:
        tx = self.transmitter(
            state["t"], self.duration, state.get("previous"), state.get("last_polarization")
        )
        return {
            "command": {"meaning": tx["meaning"], "duration": tx["duration"], "symbols": tx["symbols"]}
        }

    def _clock_drops(self, state: SessionState, n_pulses: int) -> np.ndarray:
        cfg = self.config
        drops = np.zeros(n_pulses, dtype=bool)
        if cfg.clock_drop_every:
            index = state["clock_pulses"] + np.arange(1, n_pulses + 1)
            drops |= index % cfg.clock_drop_every == 0
        if cfg.clock_pulse_loss > 0:
            rng = self.seed.child("clock", state["word_index"]).generator()
            drops |= rng.random(n_pulses) < cfg.clock_pulse_loss
        return drops

    def _channel(self, state: SessionState) -> dict:
        """Trigger pulse plus the word's pulses; a lost trigger erases the word."""
        symbols = np.asarray(state["command"]["symbols"])
        positions = np.flatnonzero(symbols)
        drops = self._clock_drops(state, 1 + positions.size)
        if drops[0]:
            received = None
        else:
            kept = symbols.copy()
            kept[positions[drops[1:]]] = 0
            received = tuple(int(s) for s in kept)
        return {"received": received, "clock_pulses": state["clock_pulses"] + 1 + positions.size}

    def _decode(self, state: SessionState) -> dict:
        received = state["received"]
        result = None if received is None else decode_command(received, self.codebook)
        decoded = result.meaning if result else None
        sent = state["command"]["meaning"]
        if decoded is None:
            status = WordStatus.ERASED
        elif decoded != sent:
            status = WordStatus.MISDECODED
        else:
            status = WordStatus.REPAIRED if result.repaired else WordStatus.CLEAN
        return {
            "decoded": decoded,
            "decode_failures": state["decode_failures"] + (decoded is None),
            "words": [{"timestamp": state["t"], "sent": sent, "decoded": decoded, "status": status}],
        }

    def _route(self, state: SessionState) -> str:
        if state["decoded"] == Meaning.DATA_TRANSMISSION and not state["tdi_locked"]:
            return "hold"
        return {
            Meaning.TDI_REFERENCE: "tdi_lock",
            Meaning.POLARIZATION_REFERENCE: "polarization_correct",
            Meaning.DATA_TRANSMISSION: "measure",
        }.get(state["decoded"], "idle")

    def _tdi_lock(self, state: SessionState) -> dict:
        cfg = self.config
        window = state["command"]["duration"]
        try:
            result = tdi_lock(
                state["tdi"],
                window=window,
                settings=cfg.lock,
                drift_rate=cfg.tdi_drift_rate,
                seed=self.seed.child("tdi", state["word_index"]),
            )
            tdi, locked, outcome = result.state, True, f"error={result.final_error:.3e}"
        except LockLost as exc:
            reset = state["tdi"].model_copy(update={"lock_integrator": 0.0, "lost_steps": 0})
            tdi, locked = drift_tdi(reset, window, cfg.tdi_drift_rate), False
            outcome = f"lost: {exc}"
            console.log(f"[red]TDI lock lost at t={state['t']:.1f} s[/red]: data held until the next reference")
        return {
            "tdi": tdi,
            "tdi_locked": locked,
            "action": "tdi_lock",
            "n_tdi_locks": state["n_tdi_locks"] + 1,
            "events": [{"timestamp": state["t"], "event": "tdi-lock", "outcome": outcome}],
        }

    def _polarization_correct(self, state: SessionState) -> dict:
        moves = self.tracker.n_corrections
        residual = self.tracker.reference_window(state["t"], state["command"]["duration"])
        moves = self.tracker.n_corrections - moves
        return {
            "action": "polarization_correct",
            "n_polarization_corrections": state["n_polarization_corrections"] + 1,
            "events": [
                {
                    "timestamp": state["t"],
                    "event": "polarization-correct",
                    "outcome": f"residual={math.degrees(residual):.2f}deg moves={moves}",
                }
            ],
        }

    def _measure(self, state: SessionState) -> dict:
        cfg = self.config
        t_start, window = state["t"], state["command"]["duration"]
        n = int(round(window * cfg.qubit_rate))
        rng = self.seed.child("block", state["word_index"]).generator()
        times = t_start + np.arange(n) / cfg.qubit_rate

        first = int(round(t_start * cfg.qubit_rate))
        bits = rng.integers(0, 2, n) if cfg.random_bits else (first + np.arange(n)) % 2

        tdi = state["tdi"]
        tdi_phase = 2.0 * np.pi * (tdi.path_imbalance + tdi.drift + cfg.tdi_drift_rate * (times - t_start)) / tdi.wavelength
        visibility = np.clip(tdi.visibility - cfg.visibility_ramp * times, 0.0, 1.0) * cfg.conversion_visibility

        # polarization error is known once per analyser sample
        period = cfg.polarization_sample_period
        n_samples = max(1, math.ceil(window / period))
        error = np.array([self.tracker.error(t_start + k * period) for k in range(n_samples)])
        sample_index = np.minimum(((times - t_start) / period).astype(int), n_samples - 1)
        mean = self.source_mean * transmission(self.loss_db) * transmitted_fraction(error[sample_index])

        photons = rng.poisson(mean)
        amp = math.sqrt(0.5)
        probabilities = slot_probabilities(amp, amp, np.pi * bits, tdi_phase, visibility)
        clicks = detect_slots(photons, probabilities, rng)
        outcomes = middle_outcomes(clicks)
        offsets = jitter_offsets(n, cfg.timing_jitter, self.seed.child("jitter", state["word_index"]))

        detected = int(np.count_nonzero(clicks.any(axis=1)))
        return {
            "action": "measure",
            "blocks": [
                {
                    "t_start": t_start,
                    "n_qubits": n,
                    "held": False,
                    "setpoint": tdi.path_imbalance,
                    "sent": bits,
                    "outcomes": outcomes,
                    "detected": detected,
                    "offsets": offsets[outcomes != UNDETECTED],
                    "bin_errors": bin_assignment_errors(offsets, cfg.bin_spacing),
                    "polarization_error": float(np.mean(error)),
                }
            ],
            "events": [{"timestamp": t_start, "event": "measure", "outcome": f"qubits={n} detected={detected}"}],
        }

    def _hold(self, state: SessionState) -> dict:
        """The Tx keeps sending but an unlocked TDI measures nothing usable."""
        t_start, window = state["t"], state["command"]["duration"]
        n = int(round(window * self.config.qubit_rate))
        return {
            "action": "hold",
            "blocks": [
                {
                    "t_start": t_start,
                    "n_qubits": n,
                    "held": True,
                    "setpoint": state["tdi"].path_imbalance,
                    "detected": 0,
                    "polarization_error": float("nan"),
                }
            ],
            "events": [{"timestamp": t_start, "event": "hold", "outcome": f"qubits={n} tdi unlocked"}],
        }

    def _idle(self, state: SessionState) -> dict:
        outcome = "erased" if state["decoded"] is None else "idle"
        return {"action": "idle", "events": [{"timestamp": state["t"], "event": "idle", "outcome": outcome}]}

    def _advance(self, state: SessionState) -> dict:
        command = state["command"]
        tdi = state["tdi"]
        if state["action"] != "tdi_lock":
            tdi = drift_tdi(tdi, command["duration"], self.config.tdi_drift_rate)
        last_polarization = state.get("last_polarization")
        if command["meaning"] == Meaning.POLARIZATION_REFERENCE:
            last_polarization = state["t"]
        qubits_sent = state["qubits_sent"]
        # the Tx sends qubits whether or not the Rx decoded the word
        if command["meaning"] == Meaning.DATA_TRANSMISSION:
            qubits_sent += int(round(command["duration"] * self.config.qubit_rate))
        return {
            "qubits_sent": qubits_sent,
            "t": state["t"] + command["duration"],
            "word_index": state["word_index"] + 1,
            "previous": command["meaning"],
            "last_polarization": last_polarization,
            "tdi": tdi,
        }

    def _route_advance(self, state: SessionState) -> str:
        return "transmit" if state["t"] < self.duration - TIME_TOLERANCE else "end"

    def _build_graph(self):
        graph = StateGraph(SessionState)
        graph.add_node("transmit", self._transmit)
        graph.add_node("channel", self._channel)
        graph.add_node("decode", self._decode)
        graph.add_node("tdi_lock", self._tdi_lock)
        graph.add_node("polarization_correct", self._polarization_correct)
        graph.add_node("measure", self._measure)
        graph.add_node("hold", self._hold)
        graph.add_node("idle", self._idle)
        graph.add_node("advance", self._advance)

        graph.add_edge(START, "transmit")
        graph.add_edge("transmit", "channel")
        graph.add_edge("channel", "decode")
        graph.add_conditional_edges(
            "decode",
            self._route,
            {
                "tdi_lock": "tdi_lock",
                "polarization_correct": "polarization_correct",
                "measure": "measure",
                "hold": "hold",
                "idle": "idle",
            },
        )
        for node in ["tdi_lock", "polarization_correct", "measure", "hold", "idle"]:
            graph.add_edge(node, "advance")
        graph.add_conditional_edges("advance", self._route_advance, {"transmit": "transmit", "end": END})
        return graph.compile()

    # ── run ──────────────────────────────────────────────────────────────────

    def recursion_limit(self) -> int:
        cfg = self.config
        shortest = min(cfg.tdi_reference, cfg.data_window, cfg.polarization_reference)
        max_words = math.ceil(self.duration / shortest) + 3
        return 6 * max_words + 10

    def initial_state(self) -> SessionState:
        return {
            "t": 0.0,
            "word_index": 0,
            "clock_pulses": 0,
            "previous": None,
            "last_polarization": None,
            "tdi": TDIState(visibility=self.config.visibility, fsr=1.0 / self.config.bin_spacing),
            "tdi_locked": True,
            "decode_failures": 0,
            "qubits_sent": 0,
            "n_tdi_locks": 0,
            "n_polarization_corrections": 0,
            "events": [],
            "words": [],
            "blocks": [],
        }

    def run(self) -> SessionResult:
        final = self.graph.invoke(self.initial_state(), config={"recursion_limit": self.recursion_limit()})
        n_words = final["word_index"]
        if n_words and final["decode_failures"] / n_words > self.config.max_decode_failure_fraction:
            raise DesyncError(
                f"{final['decode_failures']} of {n_words} clock words failed to decode"
            )
        return self._summarize(final)

    def _summarize(self, final: SessionState) -> SessionResult:
        held = [b for b in final["blocks"] if b["held"]]
        blocks = [b for b in final["blocks"] if not b["held"]]
        sent = np.concatenate([b["sent"] for b in blocks]) if blocks else np.empty(0, dtype=int)
        outcomes = np.concatenate([b["outcomes"] for b in blocks]) if blocks else np.empty(0, dtype=np.int8)
        offsets = np.concatenate([b["offsets"] for b in blocks]) if blocks else np.empty(0)
        ber = compute_ber(sent, outcomes)

        n_measured = int(sent.size)
        n_detected = sum(b["detected"] for b in blocks)
        fraction = n_detected / n_measured if n_measured else 0.0
        n_pulses_sent = final["qubits_sent"]
        words = pd.DataFrame(final["words"], columns=["timestamp", "sent", "decoded", "status"])

        report = SessionReport(
            n_pulses_sent=n_pulses_sent,
            n_detected=n_detected,
            n_measured=n_measured,
            n_held=sum(b["n_qubits"] for b in held),
            mean_photon_number=-math.log1p(-fraction) if fraction < 1 else math.inf,
            ber_plus=ber.ber_plus,
            ber_minus=ber.ber_minus,
            ber_mean=ber.ber_mean,
            ber_std_error=ber.ber_std_error,
            timing_jitter_std=float(np.std(offsets, ddof=1)) if offsets.size > 1 else 0.0,
            decode_failures=final["decode_failures"],
            repaired_words=int((words["status"] == WordStatus.REPAIRED).sum()),
            misdecoded_words=int((words["status"] == WordStatus.MISDECODED).sum()),
            n_words=final["word_index"],
            n_tdi_locks=final["n_tdi_locks"],
            n_polarization_corrections=final["n_polarization_corrections"],
            n_waveplate_moves=self.tracker.n_corrections,
            waveplate_rotation=self.tracker.total_rotation,
            mean_polarization_error=float(np.mean([b["polarization_error"] for b in blocks])) if blocks else 0.0,
            bin_assignment_errors=sum(b["bin_errors"] for b in blocks),
            duration=self.duration,
        )
        events = pd.DataFrame(final["events"], columns=["timestamp", "event", "outcome"])
        block_table = pd.DataFrame(
            final["blocks"], columns=["t_start", "n_qubits", "held", "setpoint", "detected", "polarization_error"]
        )
        return SessionResult(
            report=report, events=events, words=words, blocks=block_table, sent=sent, outcomes=outcomes
        )


def run_session(
    config: SessionConfig,
    channel: ChannelPath,
    duration: float,
    seed: RandomSeed | int = 0,
    codebook: Codebook | None = None,
    wind: SampledTrace | None = None,
) -> SessionReport:
    result = Session(config, channel, duration, seed, codebook, wind).run()
    console.log(
        f"[bold green]Session done[/bold green]: {result.report.n_words} words, "
        f"BER {result.report.ber_mean:.4f} over {result.report.n_detected} detections"
    )
    return result.report

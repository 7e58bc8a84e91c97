from typing import TypedDict

from langgraph.graph import END, START, StateGraph

from src.protocol.codebook import Codebook, Meaning
from src.protocol.settings import SessionConfig

SCHEDULE_TOLERANCE = 1e-9


class TxState(TypedDict, total=False):
    t: float
    session_duration: float
    previous: Meaning | None
    last_polarization: float | None
    meaning: Meaning
    duration: float
    symbols: tuple[int, ...]


class Transmitter:
    """Alice's sequencer: pick the next sequence block, then emit its clock word.

    The cycle is TDIReference → (PolarizationReference when due) →
    DataTransmission, repeated; a remainder shorter than a TDI reference is
    filled with Idle.
    """

    def __init__(self, config: SessionConfig, codebook: Codebook):
        self.config = config
        self.codebook = codebook

        graph = StateGraph(TxState)
        graph.add_node("schedule", self._schedule)
        graph.add_node("encode", self._encode)
        graph.add_edge(START, "schedule")
        graph.add_edge("schedule", "encode")
        graph.add_edge("encode", END)
        self.graph = graph.compile()

    def _polarization_due(self, state: TxState) -> bool:
        last = state.get("last_polarization")
        return last is None or state["t"] - last >= self.config.polarization_period - SCHEDULE_TOLERANCE

    def _schedule(self, state: TxState) -> dict:
        cfg = self.config
        remaining = state["session_duration"] - state["t"]
        previous = state.get("previous")

        if previous == Meaning.TDI_REFERENCE:
            if self._polarization_due(state):
                meaning, duration = Meaning.POLARIZATION_REFERENCE, cfg.polarization_reference
            else:
                meaning, duration = Meaning.DATA_TRANSMISSION, cfg.data_window
        elif previous == Meaning.POLARIZATION_REFERENCE:
            meaning, duration = Meaning.DATA_TRANSMISSION, cfg.data_window
        else:
            meaning, duration = Meaning.TDI_REFERENCE, cfg.tdi_reference

        if meaning == Meaning.TDI_REFERENCE and remaining < cfg.tdi_reference - SCHEDULE_TOLERANCE:
            meaning = Meaning.IDLE
        return {"meaning": meaning, "duration": min(duration, remaining)}

    def _encode(self, state: TxState) -> dict:
        return {"symbols": self.codebook.word_for(state["meaning"]).symbols}

    def __call__(
        self,
        t: float,
        session_duration: float,
        previous: Meaning | None = None,
        last_polarization: float | None = None,
    ) -> TxState:
        return self.graph.invoke(
            {
                "t": t,
                "session_duration": session_duration,
                "previous": previous,
                "last_polarization": last_polarization,
            }
        )

import os
from pathlib import Path
from typing import Any

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.errors import ConfigError, MissingCalibration
from src.model.fiber import (GROUP_INDEX, TAU_ONE_WAY_SUM, TAU_ROUND_TRIP,
                             Band, FiberSpan, SpanId, nominal_spans)
from src.noise.params import (PhaseNoiseParams, PolarizationDriftParams,
                              ThermalDelayParams)

load_dotenv()

# ── CONFIG ────────────────────────────────────────────────────────────────────

ROOT_DIR = Path(__file__).parent.parent
DATA_DIR = ROOT_DIR / "data"

CALIBRATION_PATH = Path(
    os.getenv("FIBERSIM_CALIBRATION", DATA_DIR / "calibration" / "spans.yaml")
)
SESSION_PATH = DATA_DIR / "session.yaml"
SCENARIO_PATH = os.getenv("FIBERSIM_CONFIG")
OUTPUT_DIR = Path(os.getenv("FIBERSIM_OUTPUT_DIR", "./output"))


def load_yaml(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"configuration file not found: {path}")
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")
    return data


# ══════════════════════════════════════════════════════════════════════════════
# SPAN CALIBRATION
# ══════════════════════════════════════════════════════════════════════════════


class Calibration(BaseModel):
    model_config = ConfigDict(frozen=True)

    spans: dict[SpanId, FiberSpan]
    round_trip_polarization: PolarizationDriftParams = PolarizationDriftParams.round_trip()
    tau0_round_trip: float = Field(default=TAU_ROUND_TRIP, gt=0)
    tau0_one_way_sum: float = Field(default=TAU_ONE_WAY_SUM, gt=0)
    group_index: float = Field(default=GROUP_INDEX, gt=1)

    def span(self, span_id: SpanId | str) -> FiberSpan:
        try:
            return self.spans[SpanId(span_id)]
        except (KeyError, ValueError):
            raise MissingCalibration(f"no calibration for span {span_id!r}") from None

    def select(self, ids) -> list[FiberSpan]:
        return [self.span(i) for i in ids]


def default_calibration() -> Calibration:
    return Calibration(spans=nominal_spans())


def _span_from_block(span_id: str, block: dict[str, Any]) -> FiberSpan:
    loss_db = {}
    if "loss_1550_db" in block:
        loss_db[Band.NM1550] = block["loss_1550_db"]
    if "loss_1350_db" in block:
        loss_db[Band.NM1350] = block["loss_1350_db"]
    return FiberSpan(
        id=span_id,
        length=block["length_km"],
        loss_db=loss_db,
        phase_params=PhaseNoiseParams(**block.get("phase", {})),
        pol_params=PolarizationDriftParams(**block.get("polarization", {})),
        thermal_params=ThermalDelayParams(**block.get("thermal", {})),
        excess_delay=block.get("excess_delay_ns", 0.0) * 1e-9,
    )


def load_calibration(path: str | Path | None = None) -> Calibration:
    """Span calibration file → validated spans and τ₀ conventions."""
    path = Path(path) if path else CALIBRATION_PATH
    data = load_yaml(path)
    try:
        spans = {
            SpanId(span_id): _span_from_block(span_id, block)
            for span_id, block in (data.get("spans") or {}).items()
        }
        tau0 = data.get("tau0", {})
        return Calibration(
            spans=spans,
            round_trip_polarization=PolarizationDriftParams(
                **data.get("round_trip_polarization", PolarizationDriftParams.round_trip().model_dump())
            ),
            tau0_round_trip=tau0.get("round_trip", TAU_ROUND_TRIP),
            tau0_one_way_sum=tau0.get("one_way_sum", TAU_ONE_WAY_SUM),
            group_index=data.get("group_index", GROUP_INDEX),
        )
    except (KeyError, ValueError, TypeError, ValidationError) as exc:
        raise ConfigError(f"{path}: invalid calibration ({exc})") from exc

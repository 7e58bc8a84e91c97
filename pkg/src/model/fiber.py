"""
╔══════════════════════════════════════════════════════════════╗
║  CORE MODEL — fiber spans and network topologies             ║
║                                                              ║
║    A, B : MIT-LL ↔ MIT      (two copropagating 42.5 km)      ║
║    C, D : MIT    ↔ Harvard  (two copropagating 7.9 km)       ║
║                                                              ║
║  Differential / Round-Trip / Three-Node configurations are   ║
║  composed from these spans; every value is immutable.        ║
╚══════════════════════════════════════════════════════════════╝
"""

import math
from enum import StrEnum
from typing import Iterable

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.errors import IncompatibleSpans, MissingCalibration
from src.noise.params import (PhaseNoiseParams, PolarizationDriftParams,
                              ThermalDelayParams)

SPEED_OF_LIGHT = 299_792_458.0

TAU_ROUND_TRIP = 415.045e-6  # s, 85 km loop against a <1 m local reference
TAU_DIFFERENTIAL = 108.4e-9  # s, transit difference between A and B
TAU_ONE_WAY_SUM = 425.45e-6  # s, convention behind the rounded 3.6 ns/°C estimate
ROUND_TRIP_LENGTH_KM = 85.0

# Only the product n·L is observable; pin it so that 85 km gives τ_R exactly.
GROUP_INDEX = TAU_ROUND_TRIP * SPEED_OF_LIGHT / (ROUND_TRIP_LENGTH_KM * 1e3)


class Band(StrEnum):
    NM1550 = "1550nm"
    NM1350 = "1350nm"


class SpanId(StrEnum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"


class Node(StrEnum):
    MIT_LL = "MIT-LL"
    MIT = "MIT"
    HARVARD = "Harvard"


class Direction(StrEnum):
    FORWARD = "forward"
    REVERSE = "reverse"


class ConfigurationKind(StrEnum):
    DIFFERENTIAL = "differential"
    ROUND_TRIP = "round-trip"
    THREE_NODE = "three-node"


SPAN_ENDPOINTS: dict[SpanId, tuple[Node, Node]] = {
    SpanId.A: (Node.MIT_LL, Node.MIT),
    SpanId.B: (Node.MIT_LL, Node.MIT),
    SpanId.C: (Node.MIT, Node.HARVARD),
    SpanId.D: (Node.MIT, Node.HARVARD),
}


# ══════════════════════════════════════════════════════════════════════════════
# TYPES
# ══════════════════════════════════════════════════════════════════════════════


class FiberSpan(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: SpanId
    length: float = Field(gt=0, description="Nominal length (km)")
    loss_db: dict[Band, float] = Field(description="Loss per wavelength band (dB)")
    phase_params: PhaseNoiseParams = PhaseNoiseParams()
    pol_params: PolarizationDriftParams = PolarizationDriftParams()
    thermal_params: ThermalDelayParams = ThermalDelayParams()
    endpoints: tuple[Node, Node] | None = None
    excess_delay: float = Field(
        default=0.0,
        description="Measured time of flight beyond length·n/c (s)",
    )

    @field_validator("loss_db")
    @classmethod
    def _non_negative_loss(cls, v: dict[Band, float]) -> dict[Band, float]:
        if any(loss < 0 for loss in v.values()):
            raise ValueError("span losses must be non-negative")
        return v

    @model_validator(mode="before")
    @classmethod
    def _default_endpoints(cls, data):
        if isinstance(data, dict) and data.get("endpoints") is None and "id" in data:
            data = {**data, "endpoints": SPAN_ENDPOINTS[SpanId(data["id"])]}
        return data

    @property
    def length_m(self) -> float:
        return self.length * 1e3

    def loss(self, band: Band) -> float:
        try:
            return self.loss_db[band]
        except KeyError:
            raise MissingCalibration(f"span {self.id} has no loss entry for {band}") from None


class SpanTraversal(BaseModel):
    model_config = ConfigDict(frozen=True)

    span: FiberSpan
    direction: Direction = Direction.FORWARD

    @property
    def start(self) -> Node:
        a, b = self.span.endpoints
        return a if self.direction == Direction.FORWARD else b

    @property
    def end(self) -> Node:
        a, b = self.span.endpoints
        return b if self.direction == Direction.FORWARD else a


class Arm(BaseModel):
    """One signal path seen by the receiver; empty for the local reference."""

    model_config = ConfigDict(frozen=True)

    segments: tuple[SpanTraversal, ...] = ()

    @property
    def spans(self) -> list[FiberSpan]:
        return [s.span for s in self.segments]

    @property
    def length(self) -> float:
        return sum(s.span.length for s in self.segments)


class NetworkConfiguration(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: ConfigurationKind
    arms: tuple[Arm, ...]

    @model_validator(mode="after")
    def _arm_structure(self):
        sizes = [len(arm.segments) for arm in self.arms]
        if self.kind == ConfigurationKind.DIFFERENTIAL and sizes != [1, 1]:
            raise ValueError("a Differential configuration has two arms of one span each")
        if self.kind == ConfigurationKind.ROUND_TRIP and sizes != [2, 0]:
            raise ValueError("a Round-Trip configuration has a two-span arm and a local reference")
        if self.kind == ConfigurationKind.THREE_NODE:
            if len(self.arms) != 2 or 0 in sizes:
                raise ValueError("a Three-Node configuration has two transmit arms")
            if self.arms[0].segments[-1].end != self.arms[1].segments[-1].end:
                raise ValueError("both Three-Node arms must terminate at the receive node")
        return self

    @property
    def spans(self) -> list[FiberSpan]:
        return [span for arm in self.arms for span in arm.spans]


class ChannelPath(BaseModel):
    model_config = ConfigDict(frozen=True)

    config: NetworkConfiguration
    wavelength: Band = Band.NM1550
    group_index: float = Field(default=GROUP_INDEX, gt=1)

    @property
    def measured_arm(self) -> Arm:
        return self.config.arms[0]

    @property
    def nominal_delays(self) -> tuple[float, ...]:
        """Nominal time of flight of every arm (s)."""
        return tuple(
            sum(nominal_delay(span, self.group_index) for span in arm.spans)
            for arm in self.config.arms
        )

    @property
    def tau0(self) -> float:
        return self.nominal_delays[0]


# ══════════════════════════════════════════════════════════════════════════════
# OPERATIONS
# ══════════════════════════════════════════════════════════════════════════════


def _shared_node(a: FiberSpan, b: FiberSpan) -> set[Node]:
    return set(a.endpoints) & set(b.endpoints)


def _traverse(span: FiberSpan, start: Node) -> SpanTraversal:
    direction = Direction.FORWARD if span.endpoints[0] == start else Direction.REVERSE
    return SpanTraversal(span=span, direction=direction)


def compose_configuration(spans: Iterable[FiberSpan], kind: ConfigurationKind) -> NetworkConfiguration:
    spans = list(spans)
    kind = ConfigurationKind(kind)
    ids = [s.id for s in spans]
    if len(set(ids)) != len(ids):
        raise IncompatibleSpans(f"spans must be distinct, got {ids}")

    if kind in (ConfigurationKind.DIFFERENTIAL, ConfigurationKind.ROUND_TRIP):
        if len(spans) != 2:
            raise IncompatibleSpans(f"{kind} needs exactly two spans, got {len(spans)}")
        first, second = spans
        if set(first.endpoints) != set(second.endpoints):
            raise IncompatibleSpans(
                f"{first.id} and {second.id} do not share endpoints "
                f"({'-'.join(first.endpoints)} vs {'-'.join(second.endpoints)})"
            )
        out = SpanTraversal(span=first, direction=Direction.FORWARD)
        if kind == ConfigurationKind.DIFFERENTIAL:
            arms = (Arm(segments=(out,)), Arm(segments=(SpanTraversal(span=second),)))
        else:
            back = _traverse(second, out.end)
            arms = (Arm(segments=(out, back)), Arm())
        return NetworkConfiguration(kind=kind, arms=arms)

    # Three-Node: [X, Y, Z] → arm 0 = X then Y, arm 1 = Z, both ending at one node
    if len(spans) != 3:
        raise IncompatibleSpans(f"{kind} needs three spans, got {len(spans)}")
    x, y, z = spans
    middle = _shared_node(x, y)
    if len(middle) != 1:
        raise IncompatibleSpans(f"{x.id} and {y.id} do not chain")
    (middle_node,) = middle
    start = next(n for n in x.endpoints if n != middle_node)
    receiver = next(n for n in y.endpoints if n != middle_node)
    if receiver not in z.endpoints:
        raise IncompatibleSpans(f"{z.id} does not reach the receive node {receiver}")
    z_start = next(n for n in z.endpoints if n != receiver)
    if z_start in (receiver, start):
        raise IncompatibleSpans(f"{z.id} does not start from a third node")
    arm0 = Arm(segments=(_traverse(x, start), _traverse(y, middle_node)))
    arm1 = Arm(segments=(_traverse(z, z_start),))
    return NetworkConfiguration(kind=kind, arms=(arm0, arm1))


def total_loss(path: ChannelPath, wavelength: Band | None = None) -> float:
    """Sum of span losses along the measured arm (dB)."""
    band = Band(wavelength or path.wavelength)
    return sum(span.loss(band) for span in path.measured_arm.spans)


def nominal_delay(span: FiberSpan | float, group_index: float = GROUP_INDEX) -> float:
    """Time of flight (s) of a span, or of a bare length given in km."""
    if group_index <= 1:
        raise ValueError(f"group index must exceed 1, got {group_index}")
    if isinstance(span, FiberSpan):
        return span.length_m * group_index / SPEED_OF_LIGHT + span.excess_delay
    return float(span) * 1e3 * group_index / SPEED_OF_LIGHT


def differential_delay(path: ChannelPath) -> float:
    delays = path.nominal_delays
    return delays[1] - delays[0]


# ══════════════════════════════════════════════════════════════════════════════
# NOMINAL SPANS
# ══════════════════════════════════════════════════════════════════════════════

NOMINAL_SPANS = {
    SpanId.A: (42.5, 11.9, 16.6),
    SpanId.B: (42.5, 17.0, 21.9),
    SpanId.C: (7.9, 10.4, 11.2),
    SpanId.D: (7.9, 6.2, 7.4),
}

# A/B straddle the differential delay so both τ_D and τ_R come out exact
EXCESS_DELAY = {
    SpanId.A: -TAU_DIFFERENTIAL / 2,
    SpanId.B: TAU_DIFFERENTIAL / 2,
}


def nominal_spans() -> dict[SpanId, FiberSpan]:
    """Built-in calibration; C and D reuse A's statistics scaled to their length."""
    reference_km = NOMINAL_SPANS[SpanId.A][0]
    one_way = PolarizationDriftParams.one_way()
    spans = {}
    for span_id, (length, loss_1550, loss_1350) in NOMINAL_SPANS.items():
        # diffusive drift: angular variance grows with length, rate with its root
        scale = math.sqrt(length / reference_km)
        spans[span_id] = FiberSpan(
            id=span_id,
            length=length,
            loss_db={Band.NM1550: loss_1550, Band.NM1350: loss_1350},
            pol_params=PolarizationDriftParams(
                kappa=one_way.kappa * scale, n_exponent=one_way.n_exponent
            ),
            excess_delay=EXCESS_DELAY.get(span_id, 0.0),
        )
    return spans

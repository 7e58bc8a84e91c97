from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.errors import UnitMismatch

STOKES_NORM_TOLERANCE = 1e-6


class Unit(StrEnum):
    RADIANS = "rad"
    HERTZ = "Hz"
    SECONDS = "s"
    STOKES = "stokes"
    CELSIUS = "degC"
    MPH = "mph"
    RAD_PER_S = "rad/s"
    MRAD_PER_S = "mrad/s"
    INTENSITY = "intensity"
    DIMENSIONLESS = "1"


def _frozen_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.flags.writeable:
        arr = arr.copy()
        arr.setflags(write=False)
    return arr


class SampledTrace(BaseModel):
    """Uniformly sampled time series tagged with its physical unit.

    Scalar traces hold a 1-D array. Stokes traces hold an (n, 3) array of
    unit vectors on the Poincaré sphere.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t0: float = Field(default=0.0, description="Timestamp of the first sample (s)")
    dt: float = Field(gt=0, description="Seconds per sample")
    values: np.ndarray = Field(description="Samples, read-only")
    unit: Unit

    @field_validator("values", mode="before")
    @classmethod
    def _freeze(cls, v):
        return _frozen_array(v)

    @model_validator(mode="after")
    def _check_shape(self):
        if self.values.shape[0] == 0:
            raise ValueError("a trace needs at least one sample")
        if self.unit == Unit.STOKES:
            if self.values.ndim != 2 or self.values.shape[1] != 3:
                raise ValueError("Stokes traces must have shape (n, 3)")
            norms = np.linalg.norm(self.values, axis=1)
            if np.any(np.abs(norms - 1.0) > STOKES_NORM_TOLERANCE):
                raise ValueError("Stokes triples must be unit-norm (fully polarized)")
        elif self.values.ndim != 1:
            raise ValueError(f"{self.unit} traces must be one-dimensional")
        return self

    def __len__(self) -> int:
        return int(self.values.shape[0])

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.dt

    @property
    def duration(self) -> float:
        return len(self) * self.dt

    @property
    def timestamps(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))

    def require(self, *units: Unit) -> "SampledTrace":
        if self.unit not in units:
            expected = " or ".join(str(u) for u in units)
            raise UnitMismatch(f"expected a trace in {expected}, got {self.unit}")
        return self

    def with_values(self, values, unit: Unit | None = None, **changes) -> "SampledTrace":
        return SampledTrace(
            t0=changes.get("t0", self.t0),
            dt=changes.get("dt", self.dt),
            values=values,
            unit=unit or self.unit,
        )

    def scaled(self, factor: float, unit: Unit) -> "SampledTrace":
        return self.with_values(self.values * factor, unit=unit)

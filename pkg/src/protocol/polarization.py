"""Polarization correction against the 1350 nm reference tone.

Fiber drift only costs efficiency here: the time-bin encoding is insensitive to
polarization, but the polarizing receiver optics pass cos²(θ/2) of the light.
"""

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.spatial.transform import Rotation

from src.model.trace import SampledTrace, Unit
from src.noise.params import PolarizationDriftParams, RandomSeed, as_seed
from src.noise.polarization import simulate_polarization_walk

DEFAULT_TOLERANCE = math.radians(20.0)
ANTIPODAL_TOLERANCE = 1e-12
DEFAULT_LOOP_PERIOD = 0.1
DEFAULT_RESOLUTION = math.radians(0.5)


def _unit_vector(v) -> tuple[float, float, float]:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if not math.isclose(norm, 1.0, abs_tol=1e-6):
        raise ValueError(f"Stokes triples must be unit-norm, got |p| = {norm}")
    return tuple(float(x) for x in v / norm)


def angle_between(a, b) -> float:
    return float(math.acos(max(-1.0, min(1.0, float(np.dot(a, b))))))


def transmitted_fraction(error_angle) -> np.ndarray:
    """Fraction passed by a polarizer aligned to the target (θ on the sphere)."""
    return np.cos(np.asarray(error_angle) / 2.0) ** 2


class RotationCommand(BaseModel):
    model_config = ConfigDict(frozen=True)

    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    angle: float = 0.0

    @field_validator("axis", mode="before")
    @classmethod
    def _normalize(cls, v):
        return _unit_vector(v)

    @classmethod
    def identity(cls) -> "RotationCommand":
        return cls()

    @property
    def is_identity(self) -> bool:
        return self.angle == 0.0

    def to_rotation(self) -> Rotation:
        return Rotation.from_rotvec(np.asarray(self.axis) * self.angle)

    def apply(self, p) -> np.ndarray:
        return self.to_rotation().apply(np.asarray(p, dtype=float))


class PolarizationControllerState(BaseModel):
    model_config = ConfigDict(frozen=True)

    current: tuple[float, float, float] = (1.0, 0.0, 0.0)
    target: tuple[float, float, float] = (1.0, 0.0, 0.0)
    tolerance: float = Field(default=DEFAULT_TOLERANCE, gt=0)

    @field_validator("current", "target", mode="before")
    @classmethod
    def _unit(cls, v):
        return _unit_vector(v)

    @property
    def error(self) -> float:
        return angle_between(self.current, self.target)

    @property
    def within_tolerance(self) -> bool:
        return self.error < self.tolerance


def _perpendicular(p: np.ndarray) -> np.ndarray:
    helper = np.array([1.0, 0.0, 0.0]) if abs(p[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    axis = np.cross(p, helper)
    return axis / np.linalg.norm(axis)


def polarization_correct(
    state: PolarizationControllerState, measured, gain: float = 1.0
) -> tuple[RotationCommand, PolarizationControllerState]:
    """Great-circle rotation carrying the measured Stokes vector onto the target."""
    measured = np.asarray(_unit_vector(measured))
    target = np.asarray(state.target)
    angle = angle_between(measured, target)
    if angle == 0.0:
        return RotationCommand.identity(), state.model_copy(update={"current": tuple(measured)})

    axis = np.cross(measured, target)
    norm = np.linalg.norm(axis)
    axis = _perpendicular(measured) if norm < ANTIPODAL_TOLERANCE else axis / norm
    command = RotationCommand(axis=axis, angle=gain * angle)
    corrected = command.apply(measured)
    corrected /= np.linalg.norm(corrected)
    return command, state.model_copy(update={"current": tuple(float(x) for x in corrected)})


# ══════════════════════════════════════════════════════════════════════════════
# TRACKING
# ══════════════════════════════════════════════════════════════════════════════


def _step_rotvecs(points: np.ndarray) -> np.ndarray:
    """Rotation vectors carrying each Stokes sample onto the next along a great circle."""
    axes = np.cross(points[:-1], points[1:])
    sines = np.linalg.norm(axes, axis=1)
    angles = np.arctan2(sines, np.sum(points[:-1] * points[1:], axis=1))
    scale = np.divide(angles, sines, out=np.zeros_like(angles), where=sines > 0)
    return axes * scale[:, None]


class PolarizationTracker:
    """Fiber drift followed by a waveplate correction applied at the receiver.

    The fiber output is sampled once per `dt` and followed along the great
    circle of each step in between. Inside a reference window the waveplate
    loop corrects every `loop_period`; errors under `resolution` leave the
    waveplates where they are. Outside reference windows nothing is corrected.
    """

    def __init__(
        self,
        params: PolarizationDriftParams,
        wind_mph: float | SampledTrace,
        duration: float,
        seed: RandomSeed | int = 0,
        dt: float = 1.0,
        target=(1.0, 0.0, 0.0),
        tolerance: float = DEFAULT_TOLERANCE,
        gain: float = 1.0,
        loop_period: float = DEFAULT_LOOP_PERIOD,
        resolution: float = DEFAULT_RESOLUTION,
    ):
        if loop_period <= 0 or loop_period > dt:
            raise ValueError(f"loop period must lie in (0, {dt}] s, got {loop_period}")
        if isinstance(wind_mph, SampledTrace):
            wind = wind_mph
        else:
            n = int(math.ceil(duration / dt)) + 1
            wind = SampledTrace(dt=dt, values=np.full(n, float(wind_mph)), unit=Unit.MPH)
        self.dt = dt
        self.gain = gain
        self.loop_period = loop_period
        self.resolution = resolution
        self.fiber = simulate_polarization_walk(
            params, wind, dt, p0=target, seed=as_seed(seed).child("tracker"), duration=duration
        )
        self._steps = _step_rotvecs(self.fiber.values)
        self.correction = Rotation.identity()
        self.state = PolarizationControllerState(current=target, target=target, tolerance=tolerance)
        self.n_corrections = 0
        self.total_rotation = 0.0

    def fiber_state(self, t: float) -> np.ndarray:
        x = (t - self.fiber.t0) / self.dt
        k = min(len(self.fiber) - 1, max(0, int(math.floor(x + 1e-9))))
        fraction = x - k
        if k == len(self.fiber) - 1 or fraction < 1e-9:
            return self.fiber.values[k]
        return Rotation.from_rotvec(fraction * self._steps[k]).apply(self.fiber.values[k])

    def delivered(self, t: float) -> np.ndarray:
        p = self.correction.apply(self.fiber_state(t))
        return p / np.linalg.norm(p)

    def error(self, t: float) -> float:
        return angle_between(self.delivered(t), self.state.target)

    def correct(self, t: float) -> RotationCommand:
        measured = self.delivered(t)
        if angle_between(measured, self.state.target) < self.resolution:
            self.state = self.state.model_copy(update={"current": _unit_vector(measured)})
            return RotationCommand.identity()
        command, self.state = polarization_correct(self.state, measured, self.gain)
        if not command.is_identity:
            self.correction = command.to_rotation() * self.correction
            self.n_corrections += 1
            self.total_rotation += abs(command.angle)
        return command

    def reference_window(self, start: float, duration: float) -> float:
        """Run the waveplate loop across the window; returns the residual at its close."""
        steps = max(1, int(round(duration / self.loop_period)))
        for k in range(steps):
            self.correct(start + k * self.loop_period)
        return self.error(start + steps * self.loop_period)

    def errors(self, start: float, stop: float) -> np.ndarray:
        times = np.arange(start, stop, self.dt)
        return np.array([self.error(t) for t in times])

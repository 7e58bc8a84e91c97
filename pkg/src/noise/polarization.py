"""Wind-driven polarization drift as a random walk on the Poincaré sphere.

Each step rotates the Stokes vector along a great circle in a uniformly random
tangent direction. The step angle is Rayleigh distributed with a scale set by
the wind so that the mean angular rate follows kappa · W**n.
"""

import math
from enum import StrEnum

import numpy as np
from scipy.spatial.transform import Rotation

from src.errors import NegativeWind, OutOfRange
from src.model.trace import SampledTrace, Unit
from src.noise.params import PolarizationDriftParams, RandomSeed, as_seed

RAYLEIGH_MEAN_FACTOR = math.sqrt(math.pi / 2.0)


class RoundTripMode(StrEnum):
    DIRECT = "direct"
    COMPOSED = "composed"


def rayleigh_sigma(params: PolarizationDriftParams, wind_mph, dt: float) -> np.ndarray:
    """Per-step Rayleigh scale whose mean step equals dt · kappa · W**n."""
    return dt * params.mean_rate(wind_mph) / RAYLEIGH_MEAN_FACTOR


def free_drift_budget(params: PolarizationDriftParams, wind_mph: float, tolerance: float, dt: float = 1.0) -> float:
    """Seconds of uncorrected drift before the rms excursion reaches `tolerance`.

    Rayleigh steps of scale σ spread diffusively: after N steps the rms angle
    is σ·sqrt(2N) while it stays small against the sphere.
    """
    sigma = float(rayleigh_sigma(params, wind_mph, dt))
    if sigma == 0.0:
        return math.inf
    return dt * tolerance**2 / (2.0 * sigma**2)


def _unit(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    norm = np.linalg.norm(p)
    if not math.isclose(norm, 1.0, abs_tol=1e-6):
        raise ValueError(f"Stokes vector must be unit-norm, got |p| = {norm}")
    return p / norm


def _wind_at_steps(wind: SampledTrace, dt: float, duration: float | None) -> np.ndarray:
    wind.require(Unit.MPH)
    if np.any(wind.values < 0):
        raise NegativeWind("wind speed must be non-negative")
    span = wind.timestamps[-1] - wind.t0
    if duration is None:
        duration = span
    elif duration > span + 1e-9:
        raise OutOfRange(f"wind covers {span} s, walk needs {duration} s")
    n = int(math.floor(duration / dt + 1e-9)) + 1
    times = wind.t0 + dt * np.arange(n)
    if len(wind) == 1:
        return np.full(n, wind.values[0])
    return np.interp(times, wind.timestamps, wind.values)


def _rayleigh_walk(p0: np.ndarray, sigmas: np.ndarray, rng: np.random.Generator):
    """Stokes samples and the per-step rotation vectors of one walk."""
    n_steps = len(sigmas)
    thetas = rng.rayleigh(scale=sigmas) if n_steps else np.empty(0)
    phis = rng.uniform(0.0, 2.0 * math.pi, n_steps)

    points = np.empty((n_steps + 1, 3))
    rotvecs = np.empty((n_steps, 3))
    x, y, z = p0
    points[0] = (x, y, z)
    for k in range(n_steps):
        # orthonormal tangent basis (e1, e2) at p
        if abs(x) < 0.9:
            ax, ay, az = 1.0, 0.0, 0.0
        else:
            ax, ay, az = 0.0, 1.0, 0.0
        dot = ax * x + ay * y + az * z
        e1x, e1y, e1z = ax - dot * x, ay - dot * y, az - dot * z
        norm = math.sqrt(e1x * e1x + e1y * e1y + e1z * e1z)
        e1x, e1y, e1z = e1x / norm, e1y / norm, e1z / norm
        e2x, e2y, e2z = y * e1z - z * e1y, z * e1x - x * e1z, x * e1y - y * e1x

        c, s = math.cos(phis[k]), math.sin(phis[k])
        ux, uy, uz = c * e1x + s * e2x, c * e1y + s * e2y, c * e1z + s * e2z
        theta = thetas[k]
        # rotation about p × u carries p along the great circle towards u
        rotvecs[k] = (theta * (y * uz - z * uy), theta * (z * ux - x * uz), theta * (x * uy - y * ux))

        ct, st = math.cos(theta), math.sin(theta)
        x, y, z = ct * x + st * ux, ct * y + st * uy, ct * z + st * uz
        norm = math.sqrt(x * x + y * y + z * z)
        x, y, z = x / norm, y / norm, z / norm
        points[k + 1] = (x, y, z)
    return points, rotvecs


def simulate_polarization_walk(
    params: PolarizationDriftParams,
    wind: SampledTrace,
    dt: float,
    p0=(1.0, 0.0, 0.0),
    seed: RandomSeed | int = 0,
    duration: float | None = None,
) -> SampledTrace:
    """Stokes trace driven by the wind speed W(t) (mph), one sample per dt."""
    p0 = _unit(p0)
    wind_steps = _wind_at_steps(wind, dt, duration)
    sigmas = rayleigh_sigma(params, wind_steps[:-1], dt)
    rng = as_seed(seed).child("polarization", "walk").generator()
    points, _ = _rayleigh_walk(p0, sigmas, rng)
    return SampledTrace(t0=wind.t0, dt=dt, values=points, unit=Unit.STOKES)


def _frames(rotvecs: np.ndarray) -> Rotation:
    frame = Rotation.identity()
    frames = [frame]
    for rotvec in rotvecs:
        frame = Rotation.from_rotvec(rotvec) * frame
        frames.append(frame)
    return Rotation.concatenate(frames)


def simulate_round_trip_polarization(
    one_way_a: PolarizationDriftParams,
    one_way_b: PolarizationDriftParams,
    round_trip: PolarizationDriftParams,
    wind: SampledTrace,
    dt: float,
    p0=(1.0, 0.0, 0.0),
    seed: RandomSeed | int = 0,
    mode: RoundTripMode = RoundTripMode.DIRECT,
    duration: float | None = None,
) -> SampledTrace:
    """Polarization returned by the out-and-back loop.

    DIRECT walks once with the two-way law. COMPOSED walks A and B
    independently and returns B⁻¹·A·p0; no common-mode correlation is
    assumed between the two fibers.
    """
    if RoundTripMode(mode) == RoundTripMode.DIRECT:
        return simulate_polarization_walk(round_trip, wind, dt, p0, seed, duration)

    p0 = _unit(p0)
    seed = as_seed(seed)
    wind_steps = _wind_at_steps(wind, dt, duration)[:-1]
    _, rotvecs_a = _rayleigh_walk(
        p0, rayleigh_sigma(one_way_a, wind_steps, dt), seed.child("polarization", "span-a").generator()
    )
    _, rotvecs_b = _rayleigh_walk(
        p0, rayleigh_sigma(one_way_b, wind_steps, dt), seed.child("polarization", "span-b").generator()
    )
    outbound = _frames(rotvecs_a).apply(p0)
    returned = _frames(rotvecs_b).inv().apply(outbound)
    returned /= np.linalg.norm(returned, axis=1, keepdims=True)
    return SampledTrace(t0=wind.t0, dt=dt, values=returned, unit=Unit.STOKES)

"""Temperature-driven changes of the fiber time of flight."""

import numpy as np

from src.model.trace import SampledTrace, Unit
from src.noise.params import ThermalDelayParams


def simulate_thermal_delay(
    params: ThermalDelayParams,
    temperature: SampledTrace,
    tau0: float,
    reference_temperature: float | None = None,
) -> SampledTrace:
    """Δτ(t) = (α_L + α_n)·τ₀·(T(t) − T_ref).

    T_ref defaults to the first temperature sample, so the trace starts at zero.
    """
    temperature.require(Unit.CELSIUS)
    if tau0 <= 0:
        raise ValueError(f"tau0 must be positive, got {tau0}")
    if reference_temperature is None:
        reference_temperature = float(temperature.values[0])
    delay = params.total * tau0 * (temperature.values - reference_temperature)
    return temperature.with_values(np.asarray(delay, dtype=float), unit=Unit.SECONDS)


def thermal_coefficient(params: ThermalDelayParams, tau0: float) -> float:
    """Delay change per degree (s/°C)."""
    return params.total * tau0


def differential_thermal_tau0(tau0: float, length_mismatch: float) -> float:
    """Effective τ₀ of two copropagating spans whose lengths differ by a fraction.

    Both arms see the same temperature, so only the unmatched length contributes.
    """
    if tau0 <= 0:
        raise ValueError(f"tau0 must be positive, got {tau0}")
    return abs(length_mismatch) * tau0

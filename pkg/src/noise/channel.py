"""Photon transmission through a lossy span."""

import numpy as np

from src.noise.params import RandomSeed, as_seed


def transmission(loss_db: float) -> float:
    if loss_db < 0:
        raise ValueError(f"loss must be non-negative, got {loss_db} dB")
    return 10.0 ** (-loss_db / 10.0)


def transmit_photons(
    mean_photon_number: float,
    loss_db: float,
    n_pulses: int,
    seed: RandomSeed | int = 0,
) -> np.ndarray:
    """Photon counts per pulse after the channel: Poisson(n̄·10^(−loss/10))."""
    if mean_photon_number < 0:
        raise ValueError(f"mean photon number must be non-negative, got {mean_photon_number}")
    if n_pulses < 0:
        raise ValueError(f"n_pulses must be non-negative, got {n_pulses}")
    rng = as_seed(seed).child("channel", "photons").generator()
    return rng.poisson(mean_photon_number * transmission(loss_db), size=n_pulses)

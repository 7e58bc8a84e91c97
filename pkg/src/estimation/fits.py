"""Fit result types and the scalar estimators behind them.

Every fit renders itself as a flat report record through ``to_record``; the
report emitter in ``src.cli.report`` writes one record per line.
"""

import math

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from src.errors import DegenerateInput, MisalignedTraces, TooShort
from src.model.trace import SampledTrace

ALIGNMENT_TOLERANCE = 1e-9


class FitRecord(BaseModel):
    """Shared report rendering: the record name followed by every field."""

    model_config = ConfigDict(frozen=True)

    def to_record(self, name: str) -> dict[str, str | int | float]:
        return {"record": name, "kind": type(self).__name__, **self.model_dump()}


class GaussianFit(FitRecord):
    variance: float = Field(ge=0)
    mean: float
    n_samples: int
    variance_std_error: float = Field(ge=0, description="V·√(2/(N−1))")
    skewness: float = 0.0
    excess_kurtosis: float = 0.0

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


class PowerLawFit(FitRecord):
    """y = kappa · x**n_exponent, fitted in log-log space."""

    kappa: float
    n_exponent: float
    kappa_std_error: float
    n_std_error: float
    r_squared: float
    adj_r_squared: float = Field(le=1)
    n_points: int
    n_excluded: int = Field(default=0, description="Samples dropped for y ≤ 0 or x ≤ 0")


class LinearFit(FitRecord):
    slope: float
    intercept: float
    slope_std_error: float
    intercept_std_error: float
    r_squared: float
    adj_r_squared: float = Field(le=1)
    n_points: int


# ══════════════════════════════════════════════════════════════════════════════
# ESTIMATORS
# ══════════════════════════════════════════════════════════════════════════════


def fit_gaussian_variance(samples) -> GaussianFit:
    """Unbiased sample variance and mean, plus shape moments for a Gaussianity check."""
    x = np.asarray(samples.values if isinstance(samples, SampledTrace) else samples, dtype=float)
    x = x.ravel()
    n = x.size
    if n < 2:
        raise TooShort(f"a variance needs at least two samples, got {n}")
    variance = float(np.var(x, ddof=1))
    if variance > 0:
        skewness = float(stats.skew(x))
        kurtosis = float(stats.kurtosis(x))
    else:
        skewness = kurtosis = 0.0
    return GaussianFit(
        variance=variance,
        mean=float(np.mean(x)),
        n_samples=n,
        variance_std_error=variance * math.sqrt(2.0 / (n - 1)),
        skewness=skewness,
        excess_kurtosis=kurtosis,
    )


def adjusted_r_squared(r_squared: float, n_points: int, n_regressors: int = 1) -> float:
    """1 − (1−R²)(N−1)/(N−p−1); plain R² when no degrees of freedom remain."""
    dof = n_points - n_regressors - 1
    if dof <= 0:
        return r_squared
    return 1.0 - (1.0 - r_squared) * (n_points - 1) / dof


def _r_squared(y: np.ndarray, fitted: np.ndarray) -> float:
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return min(1.0, 1.0 - ss_res / ss_tot)


def _paired_values(y, x) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(y, SampledTrace) and isinstance(x, SampledTrace):
        if len(y) != len(x) or not np.allclose(
            y.timestamps, x.timestamps, rtol=0.0, atol=ALIGNMENT_TOLERANCE * max(1.0, y.dt)
        ):
            raise MisalignedTraces("traces must share timestamps; resample first")
    y_values = np.asarray(getattr(y, "values", y), dtype=float)
    x_values = np.asarray(getattr(x, "values", x), dtype=float)
    if y_values.shape != x_values.shape:
        raise MisalignedTraces(f"length mismatch: {y_values.shape} vs {x_values.shape}")
    return y_values, x_values


def _regress(y: np.ndarray, x: np.ndarray):
    if x.size < 2 or np.ptp(x) == 0.0:
        raise DegenerateInput("the regressor must take at least two distinct values")
    result = stats.linregress(x, y)
    fitted = result.intercept + result.slope * x
    r_squared = _r_squared(y, fitted)
    return result, r_squared


def fit_power_law(y, x) -> PowerLawFit:
    """Least squares of log y = log κ + n·log x over the points with x, y > 0."""
    y_values, x_values = _paired_values(y, x)
    usable = (y_values > 0) & (x_values > 0) & np.isfinite(y_values) & np.isfinite(x_values)
    n_points = int(np.count_nonzero(usable))
    if n_points < 3:
        raise DegenerateInput(f"a power law needs at least three positive points, got {n_points}")

    log_y, log_x = np.log(y_values[usable]), np.log(x_values[usable])
    result, r_squared = _regress(log_y, log_x)
    kappa = math.exp(result.intercept)
    return PowerLawFit(
        kappa=kappa,
        n_exponent=float(result.slope),
        kappa_std_error=kappa * float(result.intercept_stderr),
        n_std_error=float(result.stderr),
        r_squared=r_squared,
        adj_r_squared=adjusted_r_squared(r_squared, n_points),
        n_points=n_points,
        n_excluded=int(y_values.size - n_points),
    )


def fit_linear(y, x) -> LinearFit:
    y_values, x_values = _paired_values(y, x)
    result, r_squared = _regress(y_values, x_values)
    return LinearFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        slope_std_error=float(result.stderr),
        intercept_std_error=float(result.intercept_stderr),
        r_squared=r_squared,
        adj_r_squared=adjusted_r_squared(r_squared, int(y_values.size)),
        n_points=int(y_values.size),
    )


def histogram(samples, bins: int = 101) -> pd.DataFrame:
    """Normalized histogram next to the Gaussian with the fitted mean and variance."""
    x = np.asarray(getattr(samples, "values", samples), dtype=float).ravel()
    fit = fit_gaussian_variance(x)
    density, edges = np.histogram(x, bins=bins, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    gaussian = (
        stats.norm.pdf(centers, loc=fit.mean, scale=fit.std)
        if fit.variance > 0
        else np.zeros_like(centers)
    )
    return pd.DataFrame({"center": centers, "density": density, "gaussian": gaussian})

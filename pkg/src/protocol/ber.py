import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.errors import Misaligned

UNDETECTED = -1


class BERResult(BaseModel):
    """Wrong-bit fractions with binomial standard errors.

    Bit 0 is |+⟩ and bit 1 is |−⟩. Trials without a usable detection are
    loss, not error, and are left out of every fraction.
    """

    model_config = ConfigDict(frozen=True)

    ber_plus: float = Field(ge=0, le=1)
    ber_minus: float = Field(ge=0, le=1)
    ber_mean: float = Field(ge=0, le=1)
    ber_plus_std_error: float = 0.0
    ber_minus_std_error: float = 0.0
    ber_std_error: float = 0.0
    n_plus: int = 0
    n_minus: int = 0

    @property
    def n_detected(self) -> int:
        return self.n_plus + self.n_minus


def _fraction(errors: int, n: int) -> tuple[float, float]:
    if n == 0:
        return 0.0, 0.0
    p = errors / n
    return p, math.sqrt(p * (1.0 - p) / n)


def compute_ber(sent, measured) -> BERResult:
    sent = np.asarray(sent)
    if not isinstance(measured, np.ndarray):
        measured = np.asarray([UNDETECTED if m is None else m for m in measured])
    if sent.shape != measured.shape:
        raise Misaligned(f"{sent.size} bits sent but {measured.size} outcomes recorded")

    detected = measured != UNDETECTED
    wrong = detected & (measured != sent)
    plus = detected & (sent == 0)
    minus = detected & (sent == 1)

    n_plus, n_minus = int(plus.sum()), int(minus.sum())
    ber_plus, se_plus = _fraction(int((wrong & plus).sum()), n_plus)
    ber_minus, se_minus = _fraction(int((wrong & minus).sum()), n_minus)
    ber_mean, se_mean = _fraction(int(wrong.sum()), n_plus + n_minus)
    return BERResult(
        ber_plus=ber_plus,
        ber_minus=ber_minus,
        ber_mean=ber_mean,
        ber_plus_std_error=se_plus,
        ber_minus_std_error=se_minus,
        ber_std_error=se_mean,
        n_plus=n_plus,
        n_minus=n_minus,
    )

"""Exception hierarchy shared by every module of the simulator."""


class FiberSimError(Exception):
    """Root of every error raised on purpose by this package."""


class ConfigError(FiberSimError):
    pass


# ── core-model ────────────────────────────────────────────────────────────────


class IncompatibleSpans(FiberSimError, ValueError):
    pass


class MissingCalibration(FiberSimError, KeyError):
    pass


class UnitMismatch(FiberSimError, ValueError):
    pass


# ── noise-sim / estimation ────────────────────────────────────────────────────


class InvalidRate(FiberSimError, ValueError):
    pass


class RateTooLow(FiberSimError, ValueError):
    pass


class RateTooHigh(FiberSimError, ValueError):
    pass


class NegativeWind(FiberSimError, ValueError):
    pass


class TooShort(FiberSimError, ValueError):
    pass


class DegenerateInput(FiberSimError, ValueError):
    pass


class RangeEmpty(FiberSimError, ValueError):
    pass


class OutOfRange(FiberSimError, ValueError):
    pass


class MisalignedTraces(FiberSimError, ValueError):
    pass


# ── protocol ──────────────────────────────────────────────────────────────────


class CapacityExceeded(FiberSimError, ValueError):
    pass


class LengthMismatch(FiberSimError, ValueError):
    pass


class DelayMismatch(FiberSimError, ValueError):
    pass


class LockLost(FiberSimError, RuntimeError):
    pass


class DesyncError(FiberSimError, RuntimeError):
    pass


class Misaligned(FiberSimError, ValueError):
    pass


# ── env-ingest ────────────────────────────────────────────────────────────────


class ParseError(FiberSimError, ValueError):
    pass


class EmptySeries(FiberSimError, ValueError):
    pass


# ── warnings ──────────────────────────────────────────────────────────────────


class UnphysicalCovarianceWarning(UserWarning):
    """|C| > V: the implied span correlation exceeds one."""

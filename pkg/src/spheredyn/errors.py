"""Exception types shared across the package."""

from __future__ import annotations


class SphereDynError(Exception):
    """Base class. ``time`` is set when the failure happened during integration."""

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time

    def __str__(self):
        msg = super().__str__()
        if self.time is not None:
            return f"t={self.time:.17g}: {msg}"
        return msg


class TangencyViolation(SphereDynError, ValueError):
    """A base point is not unit length or a companion vector is not tangent."""


class SingularInertia(SphereDynError, ArithmeticError):
    """The assembled inertia system is (numerically) singular."""


class DivergenceDetected(SphereDynError, ArithmeticError):
    """A state component became non-finite or exceeded the blow-up threshold."""


class InvalidParams(SphereDynError, ValueError):
    pass


class InsufficientSamples(SphereDynError, ValueError):
    pass


class CurveMismatch(SphereDynError, ValueError):
    """A variation curve does not belong to the trajectory it is applied to."""


class ConfigError(SphereDynError, ValueError):
    """A scenario file failed to parse or validate. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        super().__init__(message)
        self.line = line
        self.source = source

    def __str__(self):
        where = self.source or "<config>"
        if self.line is not None:
            where = f"{where}:{self.line}"
        return f"{where}: {super().__str__()}"

"""Exception types shared across the package."""

from __future__ import annotations


class SrfSimError(Exception):
    """Base class for every error raised by srfsim.

    The simulator sets ``event_time`` on errors escaping an event handler.
    """

    event_time: int | None = None

    def __str__(self) -> str:
        msg = super().__str__()
        if self.event_time is not None:
            return f"t={self.event_time}: {msg}"
        return msg


# keychain
class IllegalParent(SrfSimError):
    pass


class TopologyMismatch(SrfSimError):
    pass


class NotStatic(SrfSimError):
    pass


class UnknownVehicle(SrfSimError):
    pass


# netmodel
class ParseError(SrfSimError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class ValidationError(SrfSimError):
    pass


class UnknownNode(SrfSimError):
    pass


# akaprime
class UnreachableServer(SrfSimError):
    pass


class ResyncLoop(SrfSimError):
    pass


class CrossSrf(SrfSimError):
    pass


# simulator
class OutOfOrderEvent(SrfSimError):
    pass


# metrics
class ZeroBaseline(SrfSimError):
    pass

"""Exception types and the report object shared across modules."""

from __future__ import annotations

from dataclasses import dataclass, field


class HomCircError(Exception):
    """Base class for all library errors."""


class PartialAssignment(HomCircError):
    pass


class BudgetExceeded(HomCircError):
    pass


class DisconnectedQuery(HomCircError):
    pass


class TooLarge(HomCircError):
    pass


class Infeasible(HomCircError):
    pass


class NotDeterministic(HomCircError):
    pass


class MissingDomain(HomCircError):
    pass


class BadScope(HomCircError):
    pass


class WeightViolation(HomCircError):
    pass


class BadPartition(HomCircError):
    pass


class RetriesExhausted(HomCircError):
    pass


class NotCoordinateRespecting(HomCircError):
    pass


class NotReduced(HomCircError):
    pass


class NotOrderRespecting(HomCircError):
    pass


@dataclass
class ValidationReport:
    """List of human-readable violations; empty means OK."""

    violations: list[str] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, msg: str) -> None:
        self.violations.append(msg)

    def __bool__(self) -> bool:
        return self.ok

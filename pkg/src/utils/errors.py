"""
Exception types shared by the simulator packages.
"""

from typing import List, Sequence


class FemSimError(Exception):
    """Base class for every simulator error."""


class InvalidArgumentError(FemSimError, ValueError):
    """An operation was called outside its precondition."""


class MessageValidationError(FemSimError, ValueError):
    """A bus message violates one or more Message invariants."""

    def __init__(self, violations: Sequence[str]):
        self.violations: List[str] = list(violations)
        super().__init__("; ".join(self.violations))


class FaultApplicationError(FemSimError):
    """A fault could not be applied to the message it matched."""


class FaultloadError(FemSimError, ValueError):
    """A faultload document failed validation.

    Carries the complete list of violations, not only the first one.
    """

    def __init__(self, violations: Sequence[str]):
        self.violations: List[str] = list(violations)
        super().__init__(f"{len(self.violations)} faultload violation(s): " + "; ".join(self.violations))


class CampaignError(FemSimError, ValueError):
    """A campaign sweep is empty or out of schema bounds."""


class ScenarioError(FemSimError, ValueError):
    """A scenario document failed validation."""

    def __init__(self, violations: Sequence[str]):
        self.violations: List[str] = list(violations)
        super().__init__("; ".join(self.violations))


class TraceFormatError(FemSimError, ValueError):
    """A trace file could not be parsed."""

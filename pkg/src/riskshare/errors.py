"""Shared exception types.

Every error carries a stable ``code`` used by the CLI to report
machine-readable failures and pick the process exit status.
"""

from __future__ import annotations


class RiskshareError(Exception):
    """Base class for all library errors."""

    code = "Error"
    exit_status = 2


class ParamOutOfRange(RiskshareError):
    code = "ParamOutOfRange"


class DomainError(RiskshareError):
    code = "DomainError"


class NotConcave(RiskshareError):
    code = "NotConcave"


class HypothesisUnmet(RiskshareError):
    """Quantile-representation hypotheses fail; use the survival staircase."""

    code = "HypothesisUnmet"


class IncompatibleGrids(RiskshareError):
    code = "IncompatibleGrids"


class GridIncompatible(RiskshareError):
    """A probability parameter is not representable on the state grid."""

    code = "GridIncompatible"
    exit_status = 4

    def __init__(self, message, suggested_n=None):
        super().__init__(message)
        self.suggested_n = suggested_n


class MedianOutOfRange(RiskshareError):
    code = "MedianOutOfRange"


class UnboundedProblem(RiskshareError):
    """The group objective can be pushed to minus infinity by cash transfers."""

    code = "UnboundedProblem"
    exit_status = 3


class UnsupportedRegime(RiskshareError):
    code = "UnsupportedRegime"
    exit_status = 3


class TooLarge(RiskshareError):
    code = "TooLarge"


class DensityViolated(RiskshareError):
    code = "DensityViolated"


class AbsContViolated(RiskshareError):
    code = "AbsContViolated"

"""Exception hierarchy shared across the package.

Two families matter for the CLI exit-code contract: ``UserError`` maps to
exit code 1 (bad input, missing data, bad flags), everything else derived
from ``AdvisorError`` maps to exit code 2 (pipeline or backend failure).
"""

from __future__ import annotations


class AdvisorError(Exception):
    """Base class for every error raised by this package."""


class UserError(AdvisorError):
    """Invalid input, configuration, or request."""


class ValidationError(UserError):
    """A domain invariant was violated."""


class ParseError(UserError):
    """A structured input file could not be parsed."""

    def __init__(self, path: object, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


class NoDataError(UserError):
    """A query matched no records."""


class OutOfRangeError(UserError):
    """A requested point lies outside the supported range."""

    def __init__(self, message: str, lo: float | None = None, hi: float | None = None):
        super().__init__(message)
        self.lo = lo
        self.hi = hi


class PlanningError(UserError):
    """A scenario plan could not be constructed from the request."""


class InternalError(AdvisorError):
    """Pipeline or backend failure not attributable to user input."""


class PlannerError(InternalError):
    """Plan execution could not derive the promised predictions."""


class BackendError(InternalError):
    """An execution backend failed outside the per-scenario contract."""


class DivergedError(InternalError):
    """The optimizer hit a non-finite objective; carries the best iterate."""

    def __init__(self, message: str, best: object | None = None):
        super().__init__(message)
        self.best = best

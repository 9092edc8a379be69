"""Exception types shared across the simulator."""

from __future__ import annotations


class LegalSimError(Exception):
    """Base class for all simulator errors."""


class ConfigError(LegalSimError):
    pass


# population
class SchemaError(LegalSimError):
    pass


class DistributionError(LegalSimError):
    pass


class MissingEducationIncome(LegalSimError, KeyError):
    pass


# scenario
class UnknownEducationLabel(LegalSimError, KeyError):
    pass


class UnknownReligionLabel(LegalSimError, KeyError):
    pass


class MissingPunishmentText(LegalSimError, KeyError):
    pass


# decision
class BackendError(LegalSimError):
    pass


class BackendUnavailable(BackendError):
    pass


class BackendTimeout(BackendError):
    def __init__(self, request_id: str | None = None, message: str = "request timed out"):
        super().__init__(f"{message} (request_id={request_id})")
        self.request_id = request_id


class RateLimited(BackendError):
    pass


class UnparseableResponse(LegalSimError, ValueError):
    pass


class OutOfRangeLetter(LegalSimError, ValueError):
    pass


# legal system
class LegalSystemDisabled(LegalSimError):
    pass


class InsufficientFunds(LegalSimError):
    pass


class VerdictParseError(LegalSimError, ValueError):
    pass


class ChangeValidationError(LegalSimError, ValueError):
    pass


class UnknownBaseQuantity(LegalSimError, KeyError):
    pass


class ParseError(LegalSimError, ValueError):
    """A backend answered with something that is not the JSON we asked for."""

"""Exception hierarchy. Everything raised on bad input derives from RiskInputError."""


class RiskInputError(Exception):
    """Base class for input problems (CLI exit code 1)."""


class ParseError(RiskInputError):
    pass


class ValidationError(RiskInputError):
    """An invariant failed. ``field`` is a dotted path into the scenario/table."""

    def __init__(self, field, message):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")


class ChecksumError(ValidationError):
    pass


class NotApplicable(RiskInputError):
    pass


class MissingCurve(RiskInputError):
    pass


class OutOfRange(RiskInputError):
    pass


class SupportMismatch(RiskInputError):
    pass


class UnphysicalProbability(RiskInputError):
    """A linearized rate product exceeded 1, so the rare-event approximation broke."""

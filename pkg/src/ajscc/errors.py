"""Exception types raised across the package."""


class ValidationError(ValueError):
    """A configuration field is outside its allowed domain.

    ``field`` names the offending attribute so callers (the CLI in
    particular) can report it without parsing the message.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class SourceRangeError(ValueError):
    """A source component lies outside ``[0, R_k]``."""


class CapacityError(ValueError):
    """More nodes requested than the band can hold."""


class ResolutionError(ValueError):
    """Observation window too short to separate adjacent frequency positions."""


class SearchBudgetError(ValueError):
    """Exhaustive level search would exceed the evaluation budget."""

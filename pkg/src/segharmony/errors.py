"""Exception types shared across the package."""


class SegHarmonyError(Exception):
    pass


class DimensionError(SegHarmonyError, ValueError):
    """Operand shapes are incompatible."""


class DomainError(SegHarmonyError, ValueError):
    """Input outside an operation's mathematical domain (e.g. log of a non-positive value)."""


class ContractError(SegHarmonyError, ValueError):
    """A documented precondition was violated by the caller."""


class ConfigError(SegHarmonyError, ValueError):
    """Invalid configuration. ``key`` names the offending setting when known."""

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key


class SegmentationError(SegHarmonyError, ValueError):
    pass


class CapacityError(SegHarmonyError, ValueError):
    pass


class NumericError(SegHarmonyError, FloatingPointError):
    pass


class TrainingError(SegHarmonyError, RuntimeError):
    pass

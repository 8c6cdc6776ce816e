"""Exception hierarchy shared by all modules."""


class StrongMaxError(Exception):
    """Base class for library errors."""


class DomainError(StrongMaxError, ValueError):
    """An argument lies outside the region where a quantity is defined."""


class UnsupportedFamilyError(StrongMaxError):
    """The requested operation is not available for this family."""


class NumericalError(StrongMaxError, ArithmeticError):
    """A numerical result violates a hard constraint (e.g. a negative density)."""


class NonFiniteError(NumericalError):
    """A computation produced NaN or an infinity."""


class DimensionLimitError(StrongMaxError, ValueError):
    """Dimension exceeds the configured combinatorial cap."""


class ConfigError(StrongMaxError, ValueError):
    """Invalid experiment configuration."""

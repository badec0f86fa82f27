"""Exception types shared across the library."""


class PoslabError(Exception):
    """Base class for all errors raised by poslab."""


class DimensionError(PoslabError):
    """Shapes or index sets do not fit together."""


class DomainError(PoslabError):
    """Input is outside the mathematical domain of an operation."""


class TransversalityError(DomainError):
    """A required transversality (nonzero pairing) fails."""


class NumericError(PoslabError):
    """A numerical routine failed to reach its accuracy contract."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CapabilityError(PoslabError):
    """The requested combination (family, backend, size) is deliberately unsupported."""

"""Exception types raised across the package."""


class PLFError(Exception):
    """Base class for all package errors."""


class InvalidInputError(PLFError, ValueError):
    pass


class EmptyBatchError(PLFError, ValueError):
    pass


class DegenerateVectorError(PLFError, ValueError):
    pass


class ShapeError(PLFError, ValueError):
    pass


class ConfigError(PLFError, ValueError):
    pass


class CapacityError(PLFError, ValueError):
    """Not enough feature dimensions to place the requested class means."""


class DomainError(PLFError, ValueError):
    """Parameters outside the domain where a closed form is defined."""


class TrainingFailure(PLFError, RuntimeError):
    """A loss or gradient became non-finite."""

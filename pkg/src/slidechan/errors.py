"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Tensor extents are invalid or inconsistent."""


class ConfigError(ValueError):
    """Layer or operator hyperparameters are invalid."""


class FormatError(ValueError):
    """A fixture file is malformed or truncated."""


class SpecError(ValueError):
    """A model specification document cannot be turned into a network."""


class NumericError(ArithmeticError):
    """A non-finite value showed up during training."""

"""Exception types shared across the package."""


class OcftError(ValueError):
    """Base class for all argument/contract violations raised here."""


class DimensionError(OcftError):
    """Matrix or vector has the wrong size for the requested operation."""


class ShapeError(OcftError):
    """Structural requirement violated (skew symmetry, universe mismatch, ...)."""


class DomainError(OcftError):
    """Numeric argument outside the mathematical domain of the operation."""


class ConfigError(OcftError):
    """Run configuration invalid (sample counts, size caps, method limits)."""

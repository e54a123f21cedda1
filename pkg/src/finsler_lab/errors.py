"""Exception hierarchy shared by all modules."""


class FinslerError(Exception):
    """Base class for every error raised by finsler_lab."""


class JetError(FinslerError):
    """Invalid jet operation (singular division, domain error, untracked order)."""


class ParseError(FinslerError):
    """Malformed profile expression. ``position`` is the 0-based column."""

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class ProfileDomainError(FinslerError):
    """Profile evaluated outside its admissible (r, s) region."""


class ConvexityError(ProfileDomainError):
    """The metric fails strong convexity (or positivity) at a point."""


class ZeroVectorError(FinslerError):
    """An operation needing y != 0 was handed the zero vector."""


class SingularTensorError(FinslerError):
    """The fundamental tensor cannot be inverted."""


class SpecializationError(FinslerError):
    """A reduced equation was requested where its hypothesis does not hold."""


class ConfigError(FinslerError):
    """Invalid run configuration. ``code`` identifies the failure class."""

    def __init__(self, code, message):
        self.code = code
        super().__init__(f"{code}: {message}")


class SamplingError(FinslerError):
    """The sampler could not draw enough admissible points."""

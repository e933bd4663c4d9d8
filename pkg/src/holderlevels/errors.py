"""Exception types raised across the package."""


class HolderLevelsError(Exception):
    """Base class for all errors raised by holderlevels."""


class InvalidArgument(HolderLevelsError, ValueError):
    pass


class InsufficientData(HolderLevelsError, ValueError):
    pass


class InconsistentInput(HolderLevelsError, ValueError):
    pass


class InvalidIFS(HolderLevelsError, ValueError):
    pass


class DegenerateSimplex(HolderLevelsError, ValueError):
    pass


class OutOfDomain(HolderLevelsError, ValueError):
    pass


class UnderResolvedKernel(HolderLevelsError, ValueError):
    pass


class HolderViolation(HolderLevelsError, ValueError):
    """Sample values break the claimed Hölder bound."""


class LTooSmall(HolderLevelsError):
    """The copy count L of the rescaled-copy construction failed one of its checks."""

    def __init__(self, L, reason):
        super().__init__(f"L={L} too small: {reason}")
        self.L = L
        self.reason = reason


class LevelNotAttained(HolderLevelsError):
    pass


class EmptyRange(HolderLevelsError, ValueError):
    pass


class ResolutionTooLow(HolderLevelsError, ValueError):
    pass


class FormatError(HolderLevelsError, ValueError):
    """Malformed binary or text input file."""

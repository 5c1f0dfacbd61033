"""Exception hierarchy shared across the toolkit."""


class CylBubbleError(Exception):
    """Base class for all toolkit errors."""


class DomainError(CylBubbleError, ValueError):
    """Input outside the mathematical domain of an operation."""


class ConfigError(CylBubbleError, ValueError):
    """Invalid or inconsistent configuration."""


class SolverError(CylBubbleError, RuntimeError):
    """A numerical solver could not be set up (e.g. no bracket found)."""


class ConvergenceError(CylBubbleError, RuntimeError):
    """An iterative procedure failed to reach its tolerance."""


class TailQualityError(CylBubbleError, RuntimeError):
    """Independent tail-coefficient estimates disagree."""


class DiagnosticsError(CylBubbleError, RuntimeError):
    """An extrapolation or consistency diagnostic failed."""


class AmbiguityError(CylBubbleError, ValueError):
    """A case selection is ambiguous and must be made explicitly."""


class ResolutionError(CylBubbleError, RuntimeError):
    """A grid-based estimate is not stable under refinement."""


class SearchFailure(CylBubbleError, RuntimeError):
    """No interior critical point could be located."""

"""Exception types raised by the toolkit."""


class RisShieldError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(RisShieldError):
    """A scenario configuration is malformed; the message names the field path."""


class DegenerateGeometryError(RisShieldError):
    """A source, element, or observation point coincides with another."""


class DivergenceError(RisShieldError):
    """The gradient refinement produced a non-finite cost."""

    def __init__(self, iteration: int, message: str = ""):
        self.iteration = iteration
        super().__init__(message or f"non-finite cost at iteration {iteration}")


class EmptyRegionError(RisShieldError):
    """No active delivery region: the composite field is identically zero."""


class CacheConsistencyError(RisShieldError):
    """Incremental field cache diverged from a from-scratch evaluation."""


class CodebookFormatError(RisShieldError):
    """Base class for codebook file format errors."""


class CodebookVersionError(CodebookFormatError):
    """Magic bytes or version tag do not match the expected format."""


class CodebookTruncatedError(CodebookFormatError):
    """The file ends before all advertised entries are present."""


class CodebookDimensionError(CodebookFormatError):
    """Header dimensions are invalid or inconsistent with the file size."""

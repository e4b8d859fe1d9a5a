"""Typed exceptions shared across the package."""


class SkelminError(Exception):
    """Base class for all domain errors raised by this package."""


class EmptyRegion(SkelminError):
    """Half-space intersection is empty."""


class UnboundedRegion(SkelminError):
    """Half-space intersection is not bounded."""


class ClearanceUnsatisfiable(SkelminError):
    """Carving obstacles emptied or disconnected the background grid."""


class MergeDegenerate(SkelminError):
    """Gap fill could not reach the configured rotondity floor."""


class PeriodMismatch(SkelminError):
    """Period is not an integer multiple of the stride on some axis."""


class CenterHit(SkelminError):
    """Radial projection evaluated at (or too close to) its center."""


class NoCenterFound(SkelminError):
    """All sampled projection centers were rejected."""


class SubdivisionLimit(SkelminError):
    """Adaptive subdivision hit its depth cap before the measure converged."""


class DimensionMismatch(SkelminError):
    """Operation used with incompatible dimensions (e.g. separation with d != n-1)."""


class InitInadmissible(SkelminError):
    """Initial skeleton fails the constraint oracle."""


class ParseError(SkelminError):
    """Malformed input file; carries a 1-based line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(SkelminError):
    """Invalid or unknown configuration content."""

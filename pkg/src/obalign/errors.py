"""Exception types shared across the package.

`ConfigError` maps to CLI exit code 1, every other `AlignmentError`
subclass to exit code 2 (numerical failure).
"""


class AlignmentError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(AlignmentError):
    """Invalid run configuration; message names the offending key."""


class InvalidRotationError(AlignmentError):
    """Matrix is not a proper rotation (orthonormality defect or det <= 0)."""


class GrpSingularityError(AlignmentError):
    """Generalized Rodrigues parameter map evaluated at its singular point."""


class AmbiguousAverageError(AlignmentError):
    """Quaternion average undefined: dominant eigenvalue is not unique."""


class PolarSingularityError(AlignmentError):
    """Transport rate requested too close to the pole (|lat| > 89.9 deg)."""


class ExtrapolationError(AlignmentError):
    """Interpolation requested outside the covered time span."""


class DiscontinuityError(AlignmentError):
    """Epoch stream has a timestamp gap or overlap."""


class WindowError(AlignmentError):
    """Requested integration window is invalid or no longer retained."""


class RankDeficiencyError(AlignmentError):
    """Vector-observation set does not determine the attitude."""

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class CovarianceSqrtError(AlignmentError):
    """Covariance could not be factored (not PSD beyond tolerance)."""

"""Exception types shared across the package."""


class GkpmodError(Exception):
    """Base class for all package errors."""


class ConfigError(GkpmodError):
    """Malformed or inconsistent run configuration."""


class TruncationError(GkpmodError):
    """A requested state or operator cannot be represented at the given
    Fock cutoff within the configured leakage threshold."""

    def __init__(self, message, leakage=None, threshold=None):
        super().__init__(message)
        self.leakage = leakage
        self.threshold = threshold


class ZeroProbability(GkpmodError):
    """Conditioning on an outcome whose density is below the numerical floor."""


class RegimeError(GkpmodError):
    """Parameters outside the validity regime of the model in use."""


class InvalidRegime(RegimeError):
    """Circuit energies violate the expansion assumptions."""


class ConvergenceFailure(GkpmodError):
    """An iterative solver did not converge."""


class QuadratureFailure(GkpmodError):
    """Adaptive quadrature failed to reach the requested tolerance."""

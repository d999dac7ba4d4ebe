"""Exception types shared across the package."""


class PhotongateError(Exception):
    """Base class for all package errors."""


class UnitarityError(PhotongateError):
    """Input matrix failed a unitarity check."""


class DecompositionFailure(PhotongateError):
    """Cartan decomposition failed to converge; carries the offending input."""

    def __init__(self, message: str, matrix=None):
        super().__init__(message)
        self.matrix = matrix


class NonCanonicalCoords(PhotongateError):
    """Interaction coordinates violate the canonical chamber constraint."""


class ConvergenceFailure(PhotongateError):
    """An optical-element angle solve failed (signals a bug for unitary input)."""

"""Exception types shared across the package."""


class RsmaSimError(Exception):
    """Base class for all rsma-sim errors."""


class DimensionMismatch(RsmaSimError):
    """Array shapes are inconsistent with each other or with the profile."""


class SingularMatrix(RsmaSimError):
    """A factorization detected a pivot below tolerance.

    ``block_index`` identifies the offending block when the failure
    occurred inside a block-diagonal solve, else it is None.
    """

    def __init__(self, message, block_index=None):
        super().__init__(message)
        self.block_index = block_index


class ConvergenceFailure(RsmaSimError):
    """A dense eigensolver did not converge."""


class InvalidResolution(RsmaSimError):
    """Quantizer resolution is not a positive integer or infinity."""


class InvalidUser(RsmaSimError):
    """User index out of range."""


class ZeroChannel(RsmaSimError):
    """All channel columns vanish; no precoder direction exists."""


class InvalidProfile(RsmaSimError):
    """Quantizer profile cannot be used (e.g. zero gain on some element)."""


class RankDeficient(RsmaSimError):
    """Effective channel Gram matrix is singular beyond tolerance."""


class ZeroPrecoder(RsmaSimError):
    """Precoder carries no power and cannot be normalized."""


class ParseError(RsmaSimError):
    """Experiment config document is not valid JSON or has a malformed field."""


class ValidationError(RsmaSimError):
    """Experiment config violates a schema constraint."""
